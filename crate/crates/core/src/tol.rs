//! Numerical tolerances.
//!
//! Values are stated for `f64`. For another scalar type a tolerance
//! `eps_f64^p` becomes `eps_T^p`, so it keeps the same share of the
//! available digits (1e-10 in `f64` is about 2e-5 in `f32`).

use crate::{lit, Real};

/// CARE residual, relative to `1 + |P|_F²`.
pub const CARE_RESIDUAL: f64 = 1e-10;
/// Lyapunov residual, relative to `1 + |P|_F`.
pub const LYAPUNOV_RESIDUAL: f64 = 1e-11;
/// Real parts must be below `-HURWITZ_MARGIN`.
pub const HURWITZ_MARGIN: f64 = 1e-12;
/// Smallest admissible eigenvalue of a PSD result.
pub const PSD_TOL: f64 = 1e-10;
/// Hamiltonian eigenvalues closer than this (relative to `|H|_F`) to the
/// imaginary axis are treated as lying on it.
pub const HAMILTONIAN_AXIS: f64 = 1e-9;
/// Relative singular-value floor of the PBH rank test.
pub const PBH_RANK: f64 = 1e-10;
/// Unit-norm check for placements.
pub const UNIT_NORM: f64 = 1e-12;
/// Skew-symmetry check for tangent generators.
pub const SKEW: f64 = 1e-12;
/// Below this value of εδ the flow uses the rescaled field and Φ̄.
pub const EPS_DELTA_SINGULAR: f64 = 1e-12;

/// Scales an `f64` tolerance to the precision of `T`.
pub fn scaled<T: Real>(base: f64) -> T {
    let eps_t = crate::to_f64(T::default_epsilon());
    lit::<T>(eps_t.powf(base.ln() / f64::EPSILON.ln()))
}
