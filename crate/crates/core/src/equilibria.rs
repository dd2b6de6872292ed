//! Equilibria of the flow: detection, the ε = δ = 0 analytic structure,
//! finite-difference stability classification, and closed forms at `(v₁, v₁)`.
//!
//! At ε = δ = 0 the gains are `K = Σ = −½A⁻¹`. For symmetric `A = ΘΛΘᵀ` the
//! coordinates `β = Λ⁻¹Θᵀb̄`, `γ = Λ⁻¹Θᵀc̄` satisfy `βᵀΛ²β = γᵀΛ²γ = 1`, and a
//! placement is an equilibrium iff
//!
//! ```text
//! diag(γ) Ψ diag(γ) β = μ_β Λ² β,    diag(β) Ψ diag(β) γ = μ_γ Λ² γ,
//! ```
//!
//! with the Cauchy matrix `Ψᵢⱼ = −1/(λᵢ + λⱼ)`. Supports of β and γ are either
//! equal or disjoint; on a common support `γ = s∗β` and `β∗β ∝ ξ_s`.
//!
//! Index sets are 0-based throughout.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CodesignError, Result};
use crate::flow::gradient;
use crate::gains::{adjoint_pair, gain_pair};
use crate::linalg::{orthonormal_complement, project_out, singular_values, solve, sym_eigen_desc};
use crate::plant::{Placement, Plant};
use crate::{lit, to_f64, Real};

/// Largest dimension [`enumerate_equilibria_zero`] accepts.
pub const ENUMERATION_CAP: usize = 12;
pub const SUPPORT_THRESHOLD: f64 = 1e-10;
pub const SYSTEM_RESIDUAL: f64 = 1e-8;
pub const STABILITY_MARGIN: f64 = 1e-7;
pub const DEFAULT_FD_STEP: f64 = 1e-4;
const SINGULAR_RCOND: f64 = 1e-12;
const EIGEN_GAP: f64 = 1e-10;

/// Eigendecomposition `A = ΘΛΘᵀ` of a symmetric plant matrix, eigenvalues
/// in descending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T: Real> {
    pub theta: DMatrix<T>,
    pub lambda: DVector<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(a: &DMatrix<T>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(CodesignError::Dimension("spectrum needs a nonempty square matrix".into()));
        }
        let scale = T::one().max(a.norm());
        if (a - a.transpose()).norm() > lit::<T>(1e-12) * scale {
            return Err(CodesignError::InvalidArgument("matrix is not symmetric".into()));
        }
        let (lambda, theta) = sym_eigen_desc(a)?;
        Ok(Self { theta, lambda })
    }

    pub fn of_plant(plant: &Plant<T>) -> Result<Self> {
        Self::new(plant.a())
    }

    pub fn from_eigenvalues(eigs: &[T]) -> Result<Self> {
        Self::new(&DMatrix::from_diagonal(&DVector::from_row_slice(eigs)))
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// Eigenvector `vᵢ` (0-based).
    pub fn v(&self, i: usize) -> DVector<T> {
        self.theta.column(i).into_owned()
    }

    pub fn reconstruct(&self) -> DMatrix<T> {
        &self.theta * DMatrix::from_diagonal(&self.lambda) * self.theta.transpose()
    }

    /// All eigenvalues negative.
    pub fn require_negative(&self) -> Result<()> {
        match self.lambda.iter().position(|&l| l >= T::zero()) {
            Some(index) => Err(CodesignError::NonNegativeEigenvalue {
                index,
                value: to_f64(self.lambda[index]),
            }),
            None => Ok(()),
        }
    }

    pub fn require_distinct(&self) -> Result<()> {
        for i in 1..self.n() {
            if self.lambda[i - 1] - self.lambda[i] <= lit::<T>(EIGEN_GAP) {
                return Err(CodesignError::InvalidArgument(format!(
                    "eigenvalues {} and {} are not distinct",
                    i - 1,
                    i
                )));
            }
        }
        Ok(())
    }
}

/// `Ψᵢⱼ = −1/(λᵢ + λⱼ)`.
pub fn cauchy_matrix<T: Real>(lambda: &DVector<T>) -> Result<DMatrix<T>> {
    if let Some(index) = lambda.iter().position(|&l| l >= T::zero()) {
        return Err(CodesignError::NonNegativeEigenvalue {
            index,
            value: to_f64(lambda[index]),
        });
    }
    let n = lambda.len();
    Ok(DMatrix::from_fn(n, n, |i, j| -T::one() / (lambda[i] + lambda[j])))
}

fn support_of<T: Real>(v: &DVector<T>) -> Vec<usize> {
    let thr = lit::<T>(SUPPORT_THRESHOLD);
    v.iter().enumerate().filter(|(_, x)| x.abs() > thr).map(|(i, _)| i).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaGamma<T: Real> {
    pub beta: DVector<T>,
    pub gamma: DVector<T>,
    pub support_beta: Vec<usize>,
    pub support_gamma: Vec<usize>,
    pub mu_beta: T,
    pub mu_gamma: T,
}

impl<T: Real> BetaGamma<T> {
    fn from_vectors(beta: DVector<T>, gamma: DVector<T>, spec: &Spectrum<T>) -> Result<Self> {
        let psi = cauchy_matrix(&spec.lambda)?;
        let mu_beta = coupled(&psi, &gamma, &beta).dot(&beta);
        let mu_gamma = coupled(&psi, &beta, &gamma).dot(&gamma);
        Ok(Self {
            support_beta: support_of(&beta),
            support_gamma: support_of(&gamma),
            beta,
            gamma,
            mu_beta,
            mu_gamma,
        })
    }

    /// Orbit representative: the sign-group element making β nonnegative,
    /// then the overall sign of γ making its first nonzero entry positive.
    pub fn canonical(&self) -> Self {
        let thr = lit::<T>(SUPPORT_THRESHOLD);
        let d = self.beta.map(|x| if x < T::zero() { -T::one() } else { T::one() });
        let beta = self.beta.component_mul(&d);
        let mut gamma = self.gamma.component_mul(&d);
        if let Some(first) = gamma.iter().copied().find(|x| x.abs() > thr) {
            if first < T::zero() {
                gamma.neg_mut();
            }
        }
        Self {
            beta,
            gamma,
            ..self.clone()
        }
    }

    /// Back to unit placement vectors `b̄ = ΘΛβ`, `c̄ = ΘΛγ`.
    pub fn placement(&self, spec: &Spectrum<T>) -> Result<Placement<T>> {
        let lam = DMatrix::from_diagonal(&spec.lambda);
        Placement::from_unnormalized(&spec.theta * &lam * &self.beta, &spec.theta * &lam * &self.gamma)
    }

    /// Max-abs distance between canonical representatives.
    pub fn orbit_distance(&self, other: &Self) -> T {
        let (a, b) = (self.canonical(), other.canonical());
        (&a.beta - &b.beta).amax().max((&a.gamma - &b.gamma).amax())
    }
}

/// `diag(u) Ψ diag(u) w`.
fn coupled<T: Real>(psi: &DMatrix<T>, u: &DVector<T>, w: &DVector<T>) -> DVector<T> {
    u.component_mul(&(psi * u.component_mul(w)))
}

pub fn beta_gamma_coords<T: Real>(placement: &Placement<T>, spec: &Spectrum<T>) -> Result<BetaGamma<T>> {
    placement.check_dim(spec.n())?;
    spec.require_negative()?;
    let inv = spec.lambda.map(|l| T::one() / l);
    let beta = (spec.theta.transpose() * placement.b()).component_mul(&inv);
    let gamma = (spec.theta.transpose() * placement.c()).component_mul(&inv);
    BetaGamma::from_vectors(beta, gamma, spec)
}

/// Relative residual of the coupled equilibrium system in (β, γ).
pub fn support_system_residual<T: Real>(bg: &BetaGamma<T>, spec: &Spectrum<T>) -> Result<T> {
    let psi = cauchy_matrix(&spec.lambda)?;
    let lam2 = spec.lambda.component_mul(&spec.lambda);
    let part = |u: &DVector<T>, w: &DVector<T>, mu: T| {
        let lhs = coupled(&psi, u, w);
        let rhs = lam2.component_mul(w) * mu;
        (&lhs - &rhs).norm() / lhs.norm().max(T::default_epsilon() * T::default_epsilon())
    };
    let rb = part(&bg.gamma, &bg.beta, bg.mu_beta);
    let rc = part(&bg.beta, &bg.gamma, bg.mu_gamma);
    Ok(rb.max(rc))
}

/// Solution of `diag(s)Ψ′diag(s) ξ = (λᵢ²)` on `support`, and whether it is
/// entrywise positive.
pub fn xi_vector<T: Real>(lambda: &DVector<T>, support: &[usize], s: &[T]) -> Result<(DVector<T>, bool)> {
    if support.is_empty() || support.len() != s.len() {
        return Err(CodesignError::InvalidArgument(
            "support must be nonempty with one sign per index".into(),
        ));
    }
    if support.iter().any(|&i| i >= lambda.len()) {
        return Err(CodesignError::Dimension("support index out of range".into()));
    }
    let psi = cauchy_matrix(lambda)?;
    let k = support.len();
    let block = DMatrix::from_fn(k, k, |a, b| s[a] * psi[(support[a], support[b])] * s[b]);
    let sv = singular_values(&block)?;
    let rcond = sv[k - 1] / sv[0];
    if rcond < lit::<T>(SINGULAR_RCOND) {
        return Err(CodesignError::SingularBlock {
            support: support.to_vec(),
            rcond: to_f64(rcond),
        });
    }
    let rhs = DMatrix::from_fn(k, 1, |a, _| lambda[support[a]] * lambda[support[a]]);
    let xi = solve(&block, &rhs)?.column(0).into_owned();
    let exists = xi.iter().all(|&x| x > T::zero());
    Ok((xi, exists))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    CommonSupport,
    DisjointSupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T: Real> {
    /// Eigenvalues of the symmetrized finite-difference Hessian, descending.
    pub hessian_eigs: Vec<T>,
    pub stability: Stability,
    /// `|H − Hᵀ|_F / |H|_F` before symmetrization.
    pub asymmetry: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCandidate<T: Real> {
    pub placement: Placement<T>,
    pub kind: CandidateKind,
    pub support_beta: Vec<usize>,
    pub support_gamma: Vec<usize>,
    /// Relative signs `γ = s∗β`, zero off the support.
    pub sign_s: Vec<i8>,
    pub xi: Option<DVector<T>>,
    /// Canonical orbit representative.
    pub coords: BetaGamma<T>,
    pub residual: T,
    pub stability: Option<StabilityReport<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumeration<T: Real> {
    pub candidates: Vec<EquilibriumCandidate<T>>,
    /// Support/sign blocks skipped because the linear system was singular.
    pub singular_blocks: Vec<(Vec<usize>, Vec<i8>)>,
}

impl<T: Real> Enumeration<T> {
    pub fn common(&self) -> impl Iterator<Item = &EquilibriumCandidate<T>> {
        self.candidates.iter().filter(|c| c.kind == CandidateKind::CommonSupport)
    }

    pub fn disjoint(&self) -> impl Iterator<Item = &EquilibriumCandidate<T>> {
        self.candidates.iter().filter(|c| c.kind == CandidateKind::DisjointSupport)
    }

    /// Candidate whose canonical coordinates are nearest to `bg`.
    pub fn nearest(&self, bg: &BetaGamma<T>) -> Option<(usize, T)> {
        self.candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.coords.orbit_distance(bg)))
            .fold(None, |best, (i, d)| match best {
                Some((_, bd)) if bd <= d => best,
                _ => Some((i, d)),
            })
    }

    /// Fills in `stability` for every candidate.
    pub fn classify(&mut self, plant: &Plant<T>, h: T) -> Result<()> {
        let reports = self
            .candidates
            .par_iter()
            .map(|c| classify_stability(plant, &c.placement, h))
            .collect::<Result<Vec<_>>>()?;
        for (c, r) in self.candidates.iter_mut().zip(reports) {
            c.stability = Some(r);
        }
        Ok(())
    }
}

enum Block<T: Real> {
    Found(EquilibriumCandidate<T>),
    Absent,
    Singular(Vec<usize>, Vec<i8>),
}

fn sign_patterns(k: usize) -> Vec<Vec<i8>> {
    (0..1usize << (k - 1))
        .map(|bits| {
            (0..k)
                .map(|i| if i > 0 && bits >> (i - 1) & 1 == 1 { -1 } else { 1 })
                .collect()
        })
        .collect()
}

fn common_candidate<T: Real>(spec: &Spectrum<T>, support: &[usize], signs: &[i8]) -> Result<Block<T>> {
    let n = spec.n();
    let s: Vec<T> = signs.iter().map(|&x| lit::<T>(x as f64)).collect();
    let (xi, exists) = match xi_vector(&spec.lambda, support, &s) {
        Ok(v) => v,
        Err(CodesignError::SingularBlock { .. }) => return Ok(Block::Singular(support.to_vec(), signs.to_vec())),
        Err(e) => return Err(e),
    };
    if !exists {
        return Ok(Block::Absent);
    }
    let mut beta = DVector::zeros(n);
    let mut sign_s = vec![0i8; n];
    for (a, &i) in support.iter().enumerate() {
        beta[i] = xi[a].sqrt();
        sign_s[i] = signs[a];
    }
    let scale = beta.component_mul(&spec.lambda).norm();
    beta /= scale;
    let gamma = DVector::from_fn(n, |i, _| lit::<T>(sign_s[i] as f64) * beta[i]);
    let coords = BetaGamma::from_vectors(beta, gamma, spec)?;
    let residual = support_system_residual(&coords, spec)?;
    if residual >= lit::<T>(SYSTEM_RESIDUAL) {
        return Err(CodesignError::NotAnEquilibrium {
            residual: to_f64(residual),
        });
    }
    let mut xi_full = DVector::zeros(n);
    for (a, &i) in support.iter().enumerate() {
        xi_full[i] = xi[a];
    }
    Ok(Block::Found(EquilibriumCandidate {
        placement: coords.placement(spec)?,
        kind: CandidateKind::CommonSupport,
        support_beta: support.to_vec(),
        support_gamma: support.to_vec(),
        sign_s,
        xi: Some(xi_full),
        coords: coords.canonical(),
        residual,
        stability: None,
    }))
}

fn disjoint_candidate<T: Real>(spec: &Spectrum<T>, i: usize, j: usize) -> Result<EquilibriumCandidate<T>> {
    let placement = Placement::new(spec.v(i), spec.v(j))?;
    let coords = beta_gamma_coords(&placement, spec)?;
    let residual = support_system_residual(&coords, spec)?;
    Ok(EquilibriumCandidate {
        placement,
        kind: CandidateKind::DisjointSupport,
        support_beta: vec![i],
        support_gamma: vec![j],
        sign_s: vec![0; spec.n()],
        xi: None,
        coords: coords.canonical(),
        residual,
        stability: None,
    })
}

/// All ε = δ = 0 equilibrium orbits with common support (one representative
/// per orbit), followed by the representatives `(vᵢ, vⱼ)`, `i ≠ j`, of the
/// disjoint-support family.
pub fn enumerate_equilibria_zero<T: Real>(spec: &Spectrum<T>) -> Result<Enumeration<T>> {
    let n = spec.n();
    if n > ENUMERATION_CAP {
        return Err(CodesignError::DimensionTooLarge { n, cap: ENUMERATION_CAP });
    }
    spec.require_negative()?;
    spec.require_distinct()?;
    let mut supports: Vec<Vec<usize>> = (1..1usize << n)
        .map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect())
        .collect();
    supports.sort();
    let work: Vec<(Vec<usize>, Vec<i8>)> = supports
        .into_iter()
        .flat_map(|sup| sign_patterns(sup.len()).into_iter().map(move |s| (sup.clone(), s)))
        .collect();
    let blocks = work
        .par_iter()
        .map(|(sup, s)| common_candidate(spec, sup, s))
        .collect::<Result<Vec<_>>>()?;
    let mut candidates = Vec::new();
    let mut singular_blocks = Vec::new();
    for b in blocks {
        match b {
            Block::Found(c) => candidates.push(c),
            Block::Singular(sup, s) => singular_blocks.push((sup, s)),
            Block::Absent => {}
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                candidates.push(disjoint_candidate(spec, i, j)?);
            }
        }
    }
    Ok(Enumeration {
        candidates,
        singular_blocks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumCheck<T: Real> {
    /// `|(I − B) KMK b̄|`.
    pub residual_b: T,
    /// `|(I − C) ΣNΣ c̄|`.
    pub residual_c: T,
    pub is_equilibrium: bool,
}

impl<T: Real> EquilibriumCheck<T> {
    pub fn residual(&self) -> T {
        self.residual_b.max(self.residual_c)
    }
}

pub fn is_equilibrium<T: Real>(plant: &Plant<T>, placement: &Placement<T>, tol: T) -> Result<EquilibriumCheck<T>> {
    let gains = gain_pair(plant, placement)?;
    let adj = adjoint_pair(plant, placement, &gains)?;
    let s_b = &gains.k * &adj.m * &gains.k;
    let s_c = &gains.sigma * &adj.n * &gains.sigma;
    let residual_b = project_out(placement.b(), &(s_b * placement.b())).norm();
    let residual_c = project_out(placement.c(), &(s_c * placement.c())).norm();
    Ok(EquilibriumCheck {
        residual_b,
        residual_c,
        is_equilibrium: residual_b <= tol && residual_c <= tol,
    })
}

/// Gradient of the scale-free objective (Φ/εδ, or Φ̄ when εδ = 0) in the
/// chart `z ↦ (normalize(b̄ + U_b z_b), normalize(c̄ + U_c z_c))`.
fn chart_gradient<T: Real>(
    plant: &Plant<T>,
    base: &Placement<T>,
    u_b: &DMatrix<T>,
    u_c: &DMatrix<T>,
    z: &DVector<T>,
) -> Result<DVector<T>> {
    let m = u_b.ncols();
    let xb = base.b() + u_b * z.rows(0, m);
    let xc = base.c() + u_c * z.rows(m, m);
    let (nb, nc) = (xb.norm(), xc.norm());
    let p = Placement::new(xb / nb, xc / nc)?;
    let g = gradient(plant, &p, true)?;
    let two = lit::<T>(2.0);
    let mut out = DVector::zeros(2 * m);
    out.rows_mut(0, m).copy_from(&(u_b.transpose() * &g.g_b * (two / nb)));
    out.rows_mut(m, m).copy_from(&(u_c.transpose() * &g.g_c * (two / nc)));
    Ok(out)
}

/// Finite-difference Hessian of the scale-free objective over the
/// `2(n − 1)`-dimensional tangent space.
pub fn chart_hessian<T: Real>(plant: &Plant<T>, placement: &Placement<T>, h: T) -> Result<DMatrix<T>> {
    placement.check_dim(plant.n())?;
    let u_b = orthonormal_complement(placement.b());
    let u_c = orthonormal_complement(placement.c());
    let dim = 2 * u_b.ncols();
    let mut hess = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        let mut z = DVector::zeros(dim);
        z[i] = h;
        let plus = chart_gradient(plant, placement, &u_b, &u_c, &z)?;
        z[i] = -h;
        let minus = chart_gradient(plant, placement, &u_b, &u_c, &z)?;
        hess.set_row(i, &((plus - minus) / (lit::<T>(2.0) * h)).transpose());
    }
    Ok(hess)
}

pub fn classify_stability<T: Real>(plant: &Plant<T>, placement: &Placement<T>, h: T) -> Result<StabilityReport<T>> {
    if !(h > T::zero()) {
        return Err(CodesignError::InvalidArgument("finite-difference step must be positive".into()));
    }
    let check = is_equilibrium(plant, placement, lit(SYSTEM_RESIDUAL))?;
    if !check.is_equilibrium {
        return Err(CodesignError::NotAnEquilibrium {
            residual: to_f64(check.residual()),
        });
    }
    if plant.n() == 1 {
        return Ok(StabilityReport {
            hessian_eigs: Vec::new(),
            stability: Stability::Stable,
            asymmetry: T::zero(),
        });
    }
    let hess = chart_hessian(plant, placement, h)?;
    let norm = hess.norm();
    let asymmetry = if norm > T::zero() {
        (&hess - hess.transpose()).norm() / norm
    } else {
        T::zero()
    };
    let (eigs, _) = sym_eigen_desc(&hess)?;
    let min = eigs[eigs.len() - 1];
    let margin = lit::<T>(STABILITY_MARGIN);
    let stability = if min > margin {
        Stability::Stable
    } else if min < -margin {
        Stability::Unstable
    } else {
        Stability::Degenerate
    };
    Ok(StabilityReport {
        hessian_eigs: eigs.iter().copied().collect(),
        stability,
        asymmetry,
    })
}

fn v1_terms<T: Real>(spec: &Spectrum<T>, epsilon: T, delta: T) -> Result<(T, T, T)> {
    spec.require_distinct()?;
    let raw = spec.lambda[0];
    let zero_tol = crate::tol::scaled::<T>(1e-12) * (T::one() + spec.lambda[spec.n() - 1].abs());
    let l1 = if raw.abs() <= zero_tol { T::zero() } else { raw };
    if l1 > T::zero() || (l1 == T::zero() && (epsilon <= T::zero() || delta <= T::zero())) {
        return Err(CodesignError::NonNegativeEigenvalue {
            index: 0,
            value: to_f64(raw),
        });
    }
    if let Some(index) = (1..spec.n()).find(|&k| spec.lambda[k] >= T::zero()) {
        return Err(CodesignError::NonNegativeEigenvalue {
            index,
            value: to_f64(spec.lambda[index]),
        });
    }
    let re = (l1 * l1 + epsilon).sqrt();
    let rd = (l1 * l1 + delta).sqrt();
    Ok((l1, re, rd))
}

/// `min Φ = Φ(v₁v₁ᵀ, v₁v₁ᵀ)` in closed form.
pub fn analytic_minimum<T: Real>(spec: &Spectrum<T>, epsilon: T, delta: T) -> Result<T> {
    let (l1, re, rd) = v1_terms(spec, epsilon, delta)?;
    let lead = (re + rd) / ((re - l1) * (rd - l1));
    let tail = spec.lambda.iter().skip(1).fold(T::zero(), |acc, &l| acc + T::one() / (lit::<T>(2.0) * l));
    Ok(lead - tail)
}

/// Diagonals of `ΘᵀKΘ`, `ΘᵀΣΘ`, `ΘᵀMΘ`, `ΘᵀNΘ` at the placement `(v₁, v₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticGains<T: Real> {
    pub k: DVector<T>,
    pub sigma: DVector<T>,
    pub m: DVector<T>,
    pub n: DVector<T>,
}

pub fn analytic_gains_at_v1<T: Real>(spec: &Spectrum<T>, epsilon: T, delta: T) -> Result<AnalyticGains<T>> {
    let (l1, re, rd) = v1_terms(spec, epsilon, delta)?;
    let n = spec.n();
    let two = lit::<T>(2.0);
    let tail = |first: T| DVector::from_fn(n, |i, _| if i == 0 { first } else { -T::one() / (two * spec.lambda[i]) });
    let k = tail(T::one() / (re - l1));
    let sigma = tail(T::one() / (rd - l1));
    let mut m = DVector::zeros(n);
    let mut nn = DVector::zeros(n);
    m[0] = sigma[0] * sigma[0] / (two * re);
    nn[0] = k[0] * k[0] / (two * rd);
    Ok(AnalyticGains { k, sigma, m, n: nn })
}
