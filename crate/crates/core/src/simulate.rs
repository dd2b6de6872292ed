//! Monte Carlo check of Φ: Euler–Maruyama simulation of the plant under the
//! steady-state LQG controller and Kalman–Bucy filter.
//!
//! With `b = √ε b̄`, `c = √δ c̄`, `u = −bᵀK x̂`:
//!
//! ```text
//! dx = (Ax + bu) dt + dw
//! dx̂ = (Ax̂ + bu) dt + Σc (dy − cᵀx̂ dt),   dy = cᵀx dt + dν
//! ```
//!
//! and the path cost is the time average of `|x|² + u²` after burn-in.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::phi_from_gains;
use crate::error::{CodesignError, Result};
use crate::gains::{closed_loops, gain_pair, GainPair};
use crate::lyapunov::solve_lyapunov;
use crate::plant::{Placement, Plant};
use crate::{lit, to_f64, Real};

pub const DIVERGENCE_NORM: f64 = 1e8;
/// Fraction of diverged paths above which [`estimate_eta`] fails.
pub const MAX_DIVERGED_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T: Real> {
    pub dt: T,
    pub horizon_t: T,
    pub n_paths: usize,
    pub burn_in: T,
    pub seed: u64,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            dt: lit(1e-3),
            horizon_t: lit(200.0),
            n_paths: 64,
            burn_in: lit(20.0),
            seed: 0,
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(CodesignError::InvalidArgument("n_paths must be at least 1".into()));
        }
        if !(self.dt > T::zero()) || !(self.burn_in >= T::zero()) {
            return Err(CodesignError::InvalidArgument("need dt > 0 and burn_in ≥ 0".into()));
        }
        if self.horizon_t < lit::<T>(10.0) * self.burn_in || !(self.horizon_t - self.burn_in > self.dt) {
            return Err(CodesignError::InvalidArgument(
                "horizon_t must be at least 10·burn_in and exceed burn_in by more than dt".into(),
            ));
        }
        Ok(())
    }

    fn steps(&self) -> (usize, usize) {
        let total = to_f64(self.horizon_t / self.dt).round() as usize;
        let burn = to_f64(self.burn_in / self.dt).round() as usize;
        (total, burn)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult<T: Real> {
    pub eta_hat: T,
    /// Sample standard deviation of `per_path` over √(paths); NaN when fewer
    /// than two paths survive.
    pub stderr: T,
    pub stderr_defined: bool,
    pub per_path: Vec<T>,
    pub phi_reference: T,
    pub diverged: usize,
}

impl<T: Real> SimResult<T> {
    /// `(η̂ − Φ)/stderr`, when the standard error is defined and nonzero.
    pub fn z_score(&self) -> Option<T> {
        (self.stderr_defined && self.stderr > T::zero()).then(|| (self.eta_hat - self.phi_reference) / self.stderr)
    }
}

/// Supplies the Brownian increments of one step.
pub trait NoiseSource<T: Real> {
    /// Fills the process increment `dw` (length n) and returns the
    /// measurement increment `dν`, each with variance `dt`.
    fn increments(&mut self, sqrt_dt: T, dw: &mut [T]) -> T;
}

pub struct GaussianNoise<R: Rng> {
    rng: R,
}

impl GaussianNoise<ChaCha8Rng> {
    /// Stream `path_index` of the generator seeded with `seed`.
    pub fn for_path(seed: u64, path_index: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index as u64);
        Self { rng }
    }
}

impl<R: Rng> GaussianNoise<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<T: Real, R: Rng> NoiseSource<T> for GaussianNoise<R> {
    fn increments(&mut self, sqrt_dt: T, dw: &mut [T]) -> T {
        for w in dw.iter_mut() {
            *w = lit::<T>(self.rng.sample::<f64, _>(StandardNormal)) * sqrt_dt;
        }
        lit::<T>(self.rng.sample::<f64, _>(StandardNormal)) * sqrt_dt
    }
}

pub struct ZeroNoise;

impl<T: Real> NoiseSource<T> for ZeroNoise {
    fn increments(&mut self, _sqrt_dt: T, dw: &mut [T]) -> T {
        dw.iter_mut().for_each(|w| *w = T::zero());
        T::zero()
    }
}

/// Sums `factor` consecutive increments of `inner` at step `dt/factor`, so a
/// coarse run sees the same Brownian path as a fine run on `inner`'s stream.
pub struct Coarsened<S> {
    pub inner: S,
    pub factor: usize,
}

impl<T: Real, S: NoiseSource<T>> NoiseSource<T> for Coarsened<S> {
    fn increments(&mut self, sqrt_dt: T, dw: &mut [T]) -> T {
        let fine = sqrt_dt / lit::<T>(self.factor as f64).sqrt();
        let mut buf = vec![T::zero(); dw.len()];
        dw.iter_mut().for_each(|w| *w = T::zero());
        let mut nu = T::zero();
        for _ in 0..self.factor {
            nu += self.inner.increments(fine, &mut buf);
            for (w, b) in dw.iter_mut().zip(&buf) {
                *w += *b;
            }
        }
        nu
    }
}

/// Row-major copies of the matrices one step needs.
struct Stepper<T: Real> {
    n: usize,
    a: Vec<T>,
    /// `A − εBK`.
    f: Vec<T>,
    /// `δΣC`.
    l: Vec<T>,
    /// `√δ Σc̄`.
    gain: Vec<T>,
    /// `√ε Kb̄`, so `u = −kbᵀx̂`.
    kb: Vec<T>,
}

fn row_major<T: Real>(m: &DMatrix<T>) -> Vec<T> {
    m.transpose().iter().copied().collect()
}

impl<T: Real> Stepper<T> {
    fn new(plant: &Plant<T>, placement: &Placement<T>, gains: &GainPair<T>) -> Self {
        let (f, _) = closed_loops(plant, placement, gains);
        let l = &gains.sigma * placement.c_proj() * plant.delta();
        let gain = &gains.sigma * placement.c() * plant.delta().sqrt();
        let kb = &gains.k * placement.b() * plant.epsilon().sqrt();
        Self {
            n: plant.n(),
            a: row_major(plant.a()),
            f: row_major(&f),
            l: row_major(&l),
            gain: gain.iter().copied().collect(),
            kb: kb.iter().copied().collect(),
        }
    }
}

/// Simulates one path with Gaussian noise from stream `path_index` of `cfg.seed`.
pub fn simulate_path<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
    cfg: &SimConfig<T>,
    path_index: usize,
) -> Result<T> {
    let mut noise = GaussianNoise::for_path(cfg.seed, path_index);
    simulate_path_with(plant, placement, gains, cfg, &mut noise, path_index)
}

/// As [`simulate_path`] with an explicit noise source; `x₀ = x̂₀ = 0`.
pub fn simulate_path_with<T: Real, S: NoiseSource<T>>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
    cfg: &SimConfig<T>,
    noise: &mut S,
    path_index: usize,
) -> Result<T> {
    cfg.validate()?;
    placement.check_dim(plant.n())?;
    let st = Stepper::new(plant, placement, gains);
    let n = st.n;
    let (total, burn) = cfg.steps();
    let dt = cfg.dt;
    let sqrt_dt = dt.sqrt();
    let limit2 = lit::<T>(DIVERGENCE_NORM * DIVERGENCE_NORM);
    let mut x = vec![T::zero(); n];
    let mut xh = vec![T::zero(); n];
    let mut dx = vec![T::zero(); n];
    let mut dxh = vec![T::zero(); n];
    let mut dw = vec![T::zero(); n];
    let mut acc = T::zero();
    for k in 0..total {
        let u = -st.kb.iter().zip(&xh).fold(T::zero(), |s, (a, b)| s + *a * *b);
        if k >= burn {
            let x2 = x.iter().fold(T::zero(), |s, v| s + *v * *v);
            acc += (x2 + u * u) * dt;
        }
        let dnu = noise.increments(sqrt_dt, &mut dw);
        for i in 0..n {
            let row = i * n;
            let mut ax = T::zero();
            let mut fx = T::zero();
            let mut ax_h = T::zero();
            let mut innov = T::zero();
            for j in 0..n {
                ax += st.a[row + j] * x[j];
                ax_h += st.a[row + j] * xh[j];
                fx += st.f[row + j] * xh[j];
                innov += st.l[row + j] * (x[j] - xh[j]);
            }
            // bu = (F − A)x̂
            dx[i] = (ax + fx - ax_h) * dt + dw[i];
            dxh[i] = (fx + innov) * dt + st.gain[i] * dnu;
        }
        let mut norm2 = T::zero();
        for i in 0..n {
            x[i] += dx[i];
            xh[i] += dxh[i];
            norm2 += x[i] * x[i];
        }
        if !(norm2 <= limit2) {
            return Err(CodesignError::Diverged {
                path: path_index,
                time: to_f64(lit::<T>((k + 1) as f64) * dt),
            });
        }
    }
    Ok(acc / (lit::<T>((total - burn) as f64) * dt))
}

/// Averages `cfg.n_paths` independent paths (in parallel) and compares with Φ.
pub fn estimate_eta<T: Real>(plant: &Plant<T>, placement: &Placement<T>, cfg: &SimConfig<T>) -> Result<SimResult<T>> {
    cfg.validate()?;
    let gains = gain_pair(plant, placement)?;
    let phi_reference = phi_from_gains(plant, &gains);
    let outcomes: Vec<Result<T>> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| simulate_path(plant, placement, &gains, cfg, i))
        .collect();
    let mut per_path = Vec::with_capacity(cfg.n_paths);
    let mut diverged = 0;
    for o in outcomes {
        match o {
            Ok(v) => per_path.push(v),
            Err(CodesignError::Diverged { .. }) => diverged += 1,
            Err(e) => return Err(e),
        }
    }
    if diverged as f64 > MAX_DIVERGED_FRACTION * cfg.n_paths as f64 || per_path.is_empty() {
        return Err(CodesignError::TooManyDiverged {
            diverged,
            total: cfg.n_paths,
        });
    }
    let (eta_hat, stderr, stderr_defined) = mean_stderr(&per_path);
    Ok(SimResult {
        eta_hat,
        stderr,
        stderr_defined,
        per_path,
        phi_reference,
        diverged,
    })
}

/// Sample mean, standard error, and whether the latter is defined.
pub fn mean_stderr<T: Real>(xs: &[T]) -> (T, T, bool) {
    let m = lit::<T>(xs.len() as f64);
    let mean = xs.iter().fold(T::zero(), |s, &v| s + v) / m;
    if xs.len() < 2 {
        return (mean, lit(f64::NAN), false);
    }
    let ss = xs.iter().fold(T::zero(), |s, &v| s + (v - mean) * (v - mean));
    let sd = (ss / (m - T::one())).sqrt();
    (mean, sd / m.sqrt(), true)
}

/// Joint `(x, x̂)` drift, noise covariance and cost weight of the closed loop.
fn augmented<T: Real>(plant: &Plant<T>, placement: &Placement<T>, gains: &GainPair<T>) -> (DMatrix<T>, DMatrix<T>, DMatrix<T>) {
    let n = plant.n();
    let (f, _) = closed_loops(plant, placement, gains);
    let a = plant.a();
    let l = &gains.sigma * placement.c_proj() * plant.delta();
    let gain: DVector<T> = &gains.sigma * placement.c() * plant.delta().sqrt();
    let kb: DVector<T> = &gains.k * placement.b() * plant.epsilon().sqrt();
    let mut drift = DMatrix::zeros(2 * n, 2 * n);
    drift.view_mut((0, 0), (n, n)).copy_from(a);
    drift.view_mut((0, n), (n, n)).copy_from(&(&f - a));
    drift.view_mut((n, 0), (n, n)).copy_from(&l);
    drift.view_mut((n, n), (n, n)).copy_from(&(&f - &l));
    let mut q = DMatrix::zeros(2 * n, 2 * n);
    q.view_mut((0, 0), (n, n)).fill_with_identity();
    q.view_mut((n, n), (n, n)).copy_from(&(&gain * gain.transpose()));
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    w.view_mut((0, 0), (n, n)).fill_with_identity();
    w.view_mut((n, n), (n, n)).copy_from(&(&kb * kb.transpose()));
    (drift, q, w)
}

/// Stationary expected cost of the continuous closed loop, from the
/// augmented Lyapunov equation. Equals Φ.
pub fn stationary_cost<T: Real>(plant: &Plant<T>, placement: &Placement<T>, gains: &GainPair<T>) -> Result<T> {
    let (drift, q, w) = augmented(plant, placement, gains);
    let p = solve_lyapunov(&drift, &q)?;
    Ok((w * p).trace())
}

/// Stationary expected cost of the Euler–Maruyama chain with step `dt`,
/// the limit the simulator's estimate converges to.
pub fn discrete_stationary_cost<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
    dt: T,
) -> Result<T> {
    let (drift, q, w) = augmented(plant, placement, gains);
    let dim = drift.nrows();
    let mut phi = DMatrix::<T>::identity(dim, dim) + drift * dt;
    let mut p = q * dt;
    for _ in 0..64 {
        let next = &p + &phi * &p * phi.transpose();
        let change = (&next - &p).norm();
        p = next;
        if change <= T::default_epsilon() * p.norm() {
            return Ok((w * p).trace());
        }
        phi = &phi * &phi;
    }
    Err(CodesignError::NonConvergence {
        what: "discrete stationary covariance",
        iterations: 64,
        residual: to_f64(phi.norm()),
    })
}
