//! Joint actuator/sensor placement for stochastic linear plants.
//!
//! Given a plant `dx = Ax dt + b u dt + dw`, `dy = cᵀx dt + dν` with fixed
//! actuation gain `|b|² = ε` and sensor SNR `|c|² = δ`, the crate computes the
//! infinite-horizon time-averaged LQG cost Φ of a placement `(b̄, c̄)` and
//! minimizes it with a double-bracket gradient flow on the pair of
//! rank-one projectors `(b̄b̄ᵀ, c̄c̄ᵀ)`.
//!
//! Module map:
//!
//! - [`lyapunov`], [`care`], [`pbh`], [`gains`]: dense matrix-equation solvers
//!   and the gain/adjoint pairs `(K, Σ)`, `(M, N)`.
//! - [`cost`]: Φ, the auxiliary potential Φ̄, gain sensitivities and
//!   directional derivatives along orbit tangents.
//! - [`flow`]: the projected gradient flow, line search and multi-start.
//! - [`equilibria`]: equilibrium tests, the ε = δ = 0 analytic machinery,
//!   finite-difference stability classification and closed forms.
//! - [`simulate`]: Monte Carlo validation of Φ by closed-loop simulation.
//!
//! Everything is generic over the scalar type through [`Real`]; the `*F64`
//! aliases below name the double-precision instantiations the CLI uses.

pub mod care;
pub mod cost;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod gains;
pub mod linalg;
pub mod lyapunov;
pub mod pbh;
pub mod plant;
pub mod simulate;
pub mod tol;

pub use care::solve_care;
pub use cost::{
    cost_report, directional_derivative, phi, phi_bar, phi_bar_forms, phi_gain_sensitivity,
    CostReport, GainSensitivity, PhiBarForms,
};
pub use equilibria::{
    analytic_gains_at_v1, analytic_minimum, beta_gamma_coords, cauchy_matrix, classify_stability,
    enumerate_equilibria_zero, is_equilibrium, xi_vector, BetaGamma, CandidateKind, Enumeration,
    EquilibriumCandidate, EquilibriumCheck, Spectrum, Stability, StabilityReport,
};
pub use error::{CodesignError, Result};
pub use flow::{
    flow_step, gradient, multi_start, random_placement, run_flow, FlowIterate, FlowOptions,
    FlowStatus, FlowTrace, MultiStart, Objective, OrbitGradient,
};
pub use gains::{adjoint_pair, gain_pair, AdjointPair, GainPair};
pub use lyapunov::solve_lyapunov;
pub use pbh::{pbh_check, PbhMode, PbhReport};
pub use plant::{Placement, Plant};
pub use simulate::{estimate_eta, simulate_path, SimConfig, SimResult};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar types the solvers run on (`f32`, `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

impl<T> Real for T where T: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Lossy conversion used for error payloads and reports.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub type PlantF64 = Plant<f64>;
pub type PlacementF64 = Placement<f64>;
pub type GainPairF64 = GainPair<f64>;
pub type AdjointPairF64 = AdjointPair<f64>;
pub type CostReportF64 = CostReport<f64>;
pub type FlowOptionsF64 = FlowOptions<f64>;
pub type FlowTraceF64 = FlowTrace<f64>;
pub type SpectrumF64 = Spectrum<f64>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimResultF64 = SimResult<f64>;

pub type PlantF32 = Plant<f32>;
pub type PlacementF32 = Placement<f32>;
pub type GainPairF32 = GainPair<f32>;
