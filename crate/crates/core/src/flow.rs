//! Gradient descent of Φ on the pair of rank-one projector orbits.
//!
//! The state is the unit-vector pair `(b̄, c̄)`. Under `B = b̄b̄ᵀ` the matrix
//! flow `Ḃ = εδ[B, [B, KMK]]` is exactly `Ḃ = ḃb̄ᵀ + b̄ḃᵀ` with
//! `ḃ = εδ(I − B)KMK b̄`, so the orbit constraint holds by construction and
//! only the unit-norm retraction is needed after each discrete step.
//!
//! When εδ is (numerically) zero the unscaled field vanishes identically; the
//! flow then runs the rescaled field and descends the potential Φ̄, whose
//! gradient it is.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{phi_bar_from, phi_from_gains};
use crate::error::{CodesignError, Result};
use crate::gains::{adjoint_pair, gain_pair, pbh_reports, AdjointPair, GainPair};
use crate::linalg::project_out;
use crate::plant::{Placement, Plant};
use crate::{lit, to_f64, Real};

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
/// Below this relative size of the predicted decrease, function differences
/// are dominated by roundoff and the decrease is estimated from gradients.
const RESOLVABLE_DECREASE: f64 = 1e-8;
const PLACEMENT_DRAWS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions<T: Real> {
    pub step_init: T,
    pub step_min: T,
    /// Cap on the trial step proposed after each accepted step.
    pub step_max: T,
    pub grad_tol: T,
    pub max_iters: usize,
    pub rescaled: bool,
}

impl<T: Real> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            step_init: T::one(),
            step_min: lit(1e-14),
            step_max: lit(1e12),
            grad_tol: lit(1e-9),
            max_iters: 100_000,
            rescaled: false,
        }
    }
}

impl<T: Real> FlowOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step_min > T::zero()
            && self.step_min <= self.step_init
            && self.step_init <= self.step_max
            && self.grad_tol > T::zero()
            && self.max_iters >= 1;
        if ok {
            Ok(())
        } else {
            Err(CodesignError::InvalidArgument(
                "flow options need 0 < step_min ≤ step_init ≤ step_max, grad_tol > 0, max_iters ≥ 1".into(),
            ))
        }
    }
}

/// Which function the descent monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Φ itself (εδ > 0).
    Cost,
    /// Φ̄ = tr(AᵀMN + NMA), minimized by the rescaled field at εδ = 0.
    Potential,
}

impl Objective {
    pub fn for_plant<T: Real>(plant: &Plant<T>) -> Self {
        if plant.is_singular_gain() {
            Objective::Potential
        } else {
            Objective::Cost
        }
    }
}

/// Gradient of Φ at a placement, in matrix and sphere form.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitGradient<T: Real> {
    /// `KMK`.
    pub s_b: DMatrix<T>,
    /// `ΣNΣ`.
    pub s_c: DMatrix<T>,
    /// Sphere gradient `−scale·(I − b̄b̄ᵀ)KMK b̄`; the flow moves along `−g_b`.
    pub g_b: DVector<T>,
    /// Sphere gradient `−scale·(I − c̄c̄ᵀ)ΣNΣ c̄`.
    pub g_c: DVector<T>,
    /// Normal-metric norm of the gradient: `√2·|(g_b, g_c)|`.
    pub norm: T,
    /// εδ for the unscaled field, 1 for the rescaled one.
    pub scale: T,
}

impl<T: Real> OrbitGradient<T> {
    pub fn is_zero(&self) -> bool {
        self.norm == T::zero()
    }
}

pub fn gradient<T: Real>(plant: &Plant<T>, placement: &Placement<T>, rescaled: bool) -> Result<OrbitGradient<T>> {
    let gains = gain_pair(plant, placement)?;
    let adjoints = adjoint_pair(plant, placement, &gains)?;
    Ok(gradient_from(plant, placement, &gains, &adjoints, rescaled))
}

pub fn gradient_from<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
    adjoints: &AdjointPair<T>,
    rescaled: bool,
) -> OrbitGradient<T> {
    let scale = if rescaled || plant.is_singular_gain() {
        T::one()
    } else {
        plant.eps_delta()
    };
    let s_b = &gains.k * &adjoints.m * &gains.k;
    let s_c = &gains.sigma * &adjoints.n * &gains.sigma;
    let g_b = -project_out(placement.b(), &(&s_b * placement.b())) * scale;
    let g_c = -project_out(placement.c(), &(&s_c * placement.c())) * scale;
    let norm = lit::<T>(2.0).sqrt() * (g_b.norm_squared() + g_c.norm_squared()).sqrt();
    OrbitGradient {
        s_b,
        s_c,
        g_b,
        g_c,
        norm,
        scale,
    }
}

/// Explicit Euler step along `−grad` followed by renormalization.
pub fn flow_step<T: Real>(placement: &Placement<T>, grad: &OrbitGradient<T>, step: T) -> Result<Placement<T>> {
    if !(step > T::zero()) {
        return Err(CodesignError::InvalidArgument("step must be positive".into()));
    }
    let b = placement.b() - &grad.g_b * step;
    let c = placement.c() - &grad.g_c * step;
    let floor = lit::<T>(1e-14);
    for v in [&b, &c] {
        let nv = v.norm();
        if nv < floor || !nv.is_finite() {
            return Err(CodesignError::DegenerateStep { norm: to_f64(nv) });
        }
    }
    let (nb, nc) = (b.norm(), c.norm());
    Ok(Placement::new(b / nb, c / nc).expect("renormalized vectors are unit"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowIterate<T: Real> {
    pub placement: Placement<T>,
    pub phi: T,
    /// Value of the monitored objective (equals `phi` for [`Objective::Cost`]).
    pub objective: T,
    pub grad_norm: T,
    /// Accepted step that produced this iterate; zero for the initial point.
    pub step: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIters,
    /// Line search shrank the step below `step_min` without sufficient decrease.
    Stalled,
    SolverFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace<T: Real> {
    pub iterates: Vec<FlowIterate<T>>,
    pub status: FlowStatus,
    pub objective: Objective,
    pub final_placement: Placement<T>,
    /// Solver error and the placement it occurred at, for `SolverFailure`.
    pub failure: Option<(Placement<T>, CodesignError)>,
}

impl<T: Real> FlowTrace<T> {
    pub fn last(&self) -> Option<&FlowIterate<T>> {
        self.iterates.last()
    }

    pub fn final_objective(&self) -> Option<T> {
        self.last().map(|it| it.objective)
    }

    pub fn final_phi(&self) -> Option<T> {
        self.last().map(|it| it.phi)
    }
}

struct Point<T: Real> {
    placement: Placement<T>,
    phi: T,
    value: T,
    grad: OrbitGradient<T>,
}

fn evaluate<T: Real>(plant: &Plant<T>, placement: Placement<T>, rescaled: bool, objective: Objective) -> Result<Point<T>> {
    let gains = gain_pair(plant, &placement)?;
    let adjoints = adjoint_pair(plant, &placement, &gains)?;
    let phi = phi_from_gains(plant, &gains);
    let value = match objective {
        Objective::Cost => phi,
        Objective::Potential => phi_bar_from(plant, &adjoints),
    };
    let grad = gradient_from(plant, &placement, &gains, &adjoints, rescaled);
    Ok(Point {
        placement,
        phi,
        value,
        grad,
    })
}

/// Ratio between the objective's sphere gradient and `2·g`: the objective's
/// Euclidean gradient on the sphere pair is `2·(κ/scale)·(g_b, g_c)`.
fn objective_factor<T: Real>(plant: &Plant<T>, objective: Objective, scale: T) -> T {
    let kappa = match objective {
        Objective::Cost => plant.eps_delta(),
        Objective::Potential => T::one(),
    };
    kappa / scale
}

/// Runs the descent from `init` until the normal-metric gradient norm drops
/// below `grad_tol`.
///
/// Each iteration starts from a Barzilai–Borwein step (capped at `step_max`)
/// and halves it until sufficient decrease holds. Near
/// convergence the decrease falls below the resolution of the objective, so
/// it is then estimated by the trapezoid rule on the directional derivative.
pub fn run_flow<T: Real>(plant: &Plant<T>, init: &Placement<T>, opts: &FlowOptions<T>) -> Result<FlowTrace<T>> {
    opts.validate()?;
    init.check_dim(plant.n())?;
    let objective = Objective::for_plant(plant);
    let mut point = match evaluate(plant, init.clone(), opts.rescaled, objective) {
        Ok(p) => p,
        Err(e) => {
            return Ok(FlowTrace {
                iterates: Vec::new(),
                status: FlowStatus::SolverFailure,
                objective,
                final_placement: init.clone(),
                failure: Some((init.clone(), e)),
            })
        }
    };
    let mut iterates = vec![FlowIterate {
        placement: point.placement.clone(),
        phi: point.phi,
        objective: point.value,
        grad_norm: point.grad.norm,
        step: T::zero(),
    }];
    let noise = T::default_epsilon() * lit::<T>(64.0);
    let mut step = opts.step_init;
    let mut status = FlowStatus::MaxIters;
    let mut failure = None;

    'outer: for _ in 0..opts.max_iters {
        if point.grad.norm < opts.grad_tol {
            status = FlowStatus::Converged;
            break;
        }
        let factor = objective_factor(plant, objective, point.grad.scale);
        let g2 = point.grad.g_b.norm_squared() + point.grad.g_c.norm_squared();
        let slope0 = -lit::<T>(2.0) * factor * g2;
        let mut last_error = None;
        loop {
            let accepted = match flow_step(&point.placement, &point.grad, step)
                .and_then(|pl| evaluate(plant, pl, opts.rescaled, objective))
            {
                Ok(trial) => {
                    let armijo = lit::<T>(ARMIJO) * step * slope0;
                    let diff = trial.value - point.value;
                    let magnitude = point.value.abs().max(T::default_epsilon() * T::default_epsilon());
                    let ok = if diff <= armijo {
                        true
                    } else if (step * slope0).abs() < lit::<T>(RESOLVABLE_DECREASE) * magnitude
                        && diff <= noise * magnitude
                    {
                        let slope1 = trial_slope(&point, &trial, step, factor);
                        step * (slope0 + slope1) * lit::<T>(0.5) <= armijo
                    } else {
                        false
                    };
                    ok.then_some(trial)
                }
                Err(e) => {
                    last_error = Some(e);
                    None
                }
            };
            if let Some(trial) = accepted {
                let accepted_step = step;
                step = next_step(&point, &trial, step, opts);
                point = trial;
                iterates.push(FlowIterate {
                    placement: point.placement.clone(),
                    phi: point.phi,
                    objective: point.value,
                    grad_norm: point.grad.norm,
                    step: accepted_step,
                });
                break;
            }
            step *= lit::<T>(0.5);
            if step < opts.step_min {
                match last_error {
                    Some(e) => {
                        status = FlowStatus::SolverFailure;
                        let failed = flow_step(&point.placement, &point.grad, opts.step_min)
                            .unwrap_or_else(|_| point.placement.clone());
                        failure = Some((failed, e));
                    }
                    None => status = FlowStatus::Stalled,
                }
                break 'outer;
            }
        }
    }
    if status == FlowStatus::MaxIters && point.grad.norm < opts.grad_tol {
        status = FlowStatus::Converged;
    }
    Ok(FlowTrace {
        iterates,
        status,
        objective,
        final_placement: point.placement,
        failure,
    })
}

/// Barzilai–Borwein step from the last displacement and gradient change,
/// falling back to doubling when the curvature estimate is not positive.
fn next_step<T: Real>(from: &Point<T>, to: &Point<T>, step: T, opts: &FlowOptions<T>) -> T {
    let sb = to.placement.b() - from.placement.b();
    let sc = to.placement.c() - from.placement.c();
    let yb = &to.grad.g_b - &from.grad.g_b;
    let yc = &to.grad.g_c - &from.grad.g_c;
    let ss = sb.norm_squared() + sc.norm_squared();
    let sy = sb.dot(&yb) + sc.dot(&yc);
    let proposal = if sy > T::zero() && ss > T::zero() {
        ss / sy
    } else {
        step * lit::<T>(2.0)
    };
    proposal.max(opts.step_min).min(opts.step_max)
}

/// Derivative of the objective along the retraction curve at the trial point.
fn trial_slope<T: Real>(from: &Point<T>, trial: &Point<T>, step: T, factor: T) -> T {
    let pre_b = (from.placement.b() - &from.grad.g_b * step).norm();
    let pre_c = (from.placement.c() - &from.grad.g_c * step).norm();
    let along_b = -trial.grad.g_b.dot(&from.grad.g_b) / pre_b;
    let along_c = -trial.grad.g_c.dot(&from.grad.g_c) / pre_c;
    lit::<T>(2.0) * factor * (along_b + along_c)
}

/// Independent uniform directions on `S^{n−1} × S^{n−1}`.
pub fn random_placement<T: Real, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Placement<T> {
    assert!(n >= 1, "dimension must be at least 1");
    let draw = |rng: &mut R| loop {
        let v = DVector::<T>::from_fn(n, |_, _| lit::<T>(rng.sample::<f64, _>(StandardNormal)));
        let nv = v.norm();
        if nv > T::zero() {
            return v / nv;
        }
    };
    let b = draw(rng);
    let c = draw(rng);
    Placement::new(b, c).expect("normalized draws are unit")
}

/// Generator for start `index` of a seeded multi-start: one ChaCha stream per start.
pub fn start_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws a start placement that passes both PBH tests.
pub fn draw_start<T: Real>(plant: &Plant<T>, seed: u64, index: usize) -> Placement<T> {
    let mut rng = start_rng(seed, index);
    let mut candidate = random_placement(plant.n(), &mut rng);
    for _ in 1..PLACEMENT_DRAWS {
        match pbh_reports(plant, &candidate) {
            Ok((s, d)) if s.pass && d.pass => break,
            _ => candidate = random_placement(plant.n(), &mut rng),
        }
    }
    candidate
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiStart<T: Real> {
    pub best_index: usize,
    pub all: Vec<FlowTrace<T>>,
}

impl<T: Real> MultiStart<T> {
    pub fn best(&self) -> &FlowTrace<T> {
        &self.all[self.best_index]
    }
}

/// Runs [`run_flow`] from `n_starts` seeded random placements (in parallel on
/// the current rayon pool) and picks the run with the smallest final objective.
pub fn multi_start<T: Real>(plant: &Plant<T>, n_starts: usize, seed: u64, opts: &FlowOptions<T>) -> Result<MultiStart<T>> {
    if n_starts == 0 {
        return Err(CodesignError::InvalidArgument("n_starts must be at least 1".into()));
    }
    opts.validate()?;
    let all = (0..n_starts)
        .into_par_iter()
        .map(|i| run_flow(plant, &draw_start(plant, seed, i), opts))
        .collect::<Result<Vec<_>>>()?;
    let best_index = all
        .iter()
        .enumerate()
        .filter(|(_, t)| t.status != FlowStatus::SolverFailure)
        .filter_map(|(i, t)| t.final_objective().map(|v| (i, v)))
        .fold(None::<(usize, T)>, |best, (i, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
        .ok_or(CodesignError::AllStartsFailed { starts: n_starts })?;
    Ok(MultiStart { best_index, all })
}
