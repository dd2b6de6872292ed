//! Gain pair `(K, Σ)` from the two AREs and adjoint pair `(M, N)` from the
//! two Lyapunov equations that drive the gradient.

use nalgebra::DMatrix;

use crate::care::{self, solve_care};
use crate::error::{CodesignError, Result};
use crate::lyapunov::solve_lyapunov;
use crate::pbh::{pbh_check, PbhMode, PbhReport};
use crate::plant::{Placement, Plant};
use crate::Real;

/// Stabilizing solutions of
/// `AᵀK + KA − εKBK + I = 0` and `AΣ + ΣAᵀ − δΣCΣ + I = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainPair<T: Real> {
    pub k: DMatrix<T>,
    pub sigma: DMatrix<T>,
    pub residual_k: T,
    pub residual_sigma: T,
}

/// Solutions of `(A − εBK)M + M(A − εBK)ᵀ + ΣCΣ = 0` and
/// `(A − δΣC)ᵀN + N(A − δΣC) + KBK = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointPair<T: Real> {
    pub m: DMatrix<T>,
    pub n: DMatrix<T>,
}

/// Both PBH reports for a placement.
pub fn pbh_reports<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<(PbhReport, PbhReport)> {
    placement.check_dim(plant.n())?;
    Ok((
        pbh_check(plant.a(), placement.b(), PbhMode::Stabilizability)?,
        pbh_check(plant.a(), placement.c(), PbhMode::Detectability)?,
    ))
}

fn violation(report: &PbhReport) -> Option<CodesignError> {
    report.first_failure().map(|f| CodesignError::PbhViolation {
        mode: report.mode,
        re: f.re,
        im: f.im,
        margin: f.margin,
    })
}

pub fn gain_pair<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<GainPair<T>> {
    let (stab, det) = pbh_reports(plant, placement)?;
    if let Some(err) = violation(&stab).or_else(|| violation(&det)) {
        return Err(err);
    }
    let n = plant.n();
    let a = plant.a();
    let eye = DMatrix::<T>::identity(n, n);
    let w_k = placement.b_proj() * plant.epsilon();
    let w_s = placement.c_proj() * plant.delta();
    let k = solve_care(a, &w_k, &eye)?;
    let at = a.transpose();
    let sigma = solve_care(&at, &w_s, &eye)?;
    Ok(GainPair {
        residual_k: care::residual(a, &w_k, &eye, &k),
        residual_sigma: care::residual(&at, &w_s, &eye, &sigma),
        k,
        sigma,
    })
}

pub fn adjoint_pair<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
) -> Result<AdjointPair<T>> {
    let (f, g) = closed_loops(plant, placement, gains);
    let b = placement.b_proj();
    let c = placement.c_proj();
    let scc = &gains.sigma * c * &gains.sigma;
    let kbk = &gains.k * b * &gains.k;
    let m = solve_lyapunov(&f, &scc)?;
    let n = solve_lyapunov(&g.transpose(), &kbk)?;
    Ok(AdjointPair { m, n })
}

/// `(A − εBK, A − δΣC)`.
pub fn closed_loops<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    gains: &GainPair<T>,
) -> (DMatrix<T>, DMatrix<T>) {
    let a = plant.a();
    let f = a - placement.b_proj() * &gains.k * plant.epsilon();
    let g = a - &gains.sigma * placement.c_proj() * plant.delta();
    (f, g)
}
