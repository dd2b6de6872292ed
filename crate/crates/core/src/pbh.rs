//! Popov–Belevitch–Hautus rank tests for stabilizability and detectability.
//!
//! The rank of `[A − λI, v]` (or `[Aᵀ − λI, v]`) is reported through its
//! smallest singular value relative to `max(1, |A|_F + |v|)`, so callers see
//! how close a placement is to losing the property instead of a bare flag.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{eigenvalues, singular_values};
use crate::{to_f64, tol, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PbhMode {
    Stabilizability,
    Detectability,
}

impl std::fmt::Display for PbhMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PbhMode::Stabilizability => write!(f, "stabilizability"),
            PbhMode::Detectability => write!(f, "detectability"),
        }
    }
}

/// Rank test at one eigenvalue with nonnegative real part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbhEigenCheck {
    pub re: f64,
    pub im: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbhReport {
    pub mode: PbhMode,
    pub pass: bool,
    /// One entry per eigenvalue of `A` with `Re λ ≥ 0` (within the Hurwitz margin).
    pub checks: Vec<PbhEigenCheck>,
}

impl PbhReport {
    pub fn first_failure(&self) -> Option<&PbhEigenCheck> {
        self.checks.iter().find(|c| !c.pass)
    }

    /// Smallest rank margin over the tested eigenvalues; `None` if `A` is Hurwitz.
    pub fn min_margin(&self) -> Option<f64> {
        self.checks.iter().map(|c| c.margin).reduce(f64::min)
    }
}

pub fn pbh_check<T: Real>(a: &DMatrix<T>, v: &DVector<T>, mode: PbhMode) -> crate::Result<PbhReport> {
    let n = a.nrows();
    if a.ncols() != n || v.len() != n {
        return Err(crate::CodesignError::Dimension(format!(
            "PBH: A is {:?}, v has length {}",
            a.shape(),
            v.len()
        )));
    }
    let op = match mode {
        PbhMode::Stabilizability => a.clone(),
        PbhMode::Detectability => a.transpose(),
    };
    let scale = T::one().max(a.norm() + v.norm());
    let threshold = tol::scaled::<T>(tol::PBH_RANK);
    let unstable_floor = -tol::scaled::<T>(tol::HURWITZ_MARGIN) * T::one().max(a.norm());

    let mut checks = Vec::new();
    for lambda in eigenvalues(&op)? {
        if lambda.re < unstable_floor {
            continue;
        }
        let sigma_min = rank_margin(&op, v, lambda)?;
        let margin = sigma_min / scale;
        checks.push(PbhEigenCheck {
            re: to_f64(lambda.re),
            im: to_f64(lambda.im),
            margin: to_f64(margin),
            pass: margin > threshold,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(PbhReport { mode, pass, checks })
}

/// Smallest singular value of `[M − λI, v]`, via the real embedding
/// `[[Re, −Im], [Im, Re]]` whose singular values are those of the complex
/// matrix, each doubled.
fn rank_margin<T: Real>(m: &DMatrix<T>, v: &DVector<T>, lambda: Complex<T>) -> crate::Result<T> {
    let n = m.nrows();
    let shifted = m - DMatrix::<T>::identity(n, n) * lambda.re;
    if lambda.im == T::zero() {
        let mut aug = DMatrix::<T>::zeros(n, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&shifted);
        aug.set_column(n, v);
        let s = singular_values(&aug)?;
        return Ok(s[n - 1]);
    }
    let im = DMatrix::<T>::identity(n, n) * lambda.im;
    let mut aug = DMatrix::<T>::zeros(2 * n, 2 * n + 2);
    aug.view_mut((0, 0), (n, n)).copy_from(&shifted);
    aug.view_mut((0, n), (n, n)).copy_from(&im);
    aug.view_mut((n, 0), (n, n)).copy_from(&(-&im));
    aug.view_mut((n, n), (n, n)).copy_from(&shifted);
    aug.view_mut((0, 2 * n), (n, 1)).copy_from(v);
    aug.view_mut((n, 2 * n + 1), (n, 1)).copy_from(v);
    let s = singular_values(&aug)?;
    Ok(s[2 * n - 1])
}
