//! Continuous Lyapunov equation `F P + P Fᵀ + Q = 0`.
//!
//! Bartels–Stewart: `F = U T Uᵀ` with `T` quasi-upper-triangular, then the
//! transformed equation `T Y + Y Tᵀ = −UᵀQU` is solved block by block from
//! the bottom-right corner, each 1×1/2×2 block pair being a Kronecker system
//! of size at most 4.

use nalgebra::DMatrix;

use crate::error::{CodesignError, Result};
use crate::linalg::{ensure_hurwitz, real_schur, solve, symmetrize};
use crate::{lit, tol, Real};

/// Solves `F P + P Fᵀ + Q = 0` for Hurwitz `F`.
pub fn solve_lyapunov<T: Real>(f: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_dims(f, q)?;
    ensure_hurwitz(f)?;
    let (u, t) = real_schur(f)?;
    let blocks = diagonal_blocks(&t);
    let symmetric_rhs = crate::linalg::asymmetry(q) <= T::default_epsilon() * (T::one() + q.norm());

    let transformed = |rhs: &DMatrix<T>| -> Result<DMatrix<T>> {
        let c = -(u.transpose() * rhs * &u);
        let y = solve_quasi_triangular(&t, &blocks, &c)?;
        Ok(&u * y * u.transpose())
    };

    let mut p = transformed(q)?;
    if symmetric_rhs {
        p = symmetrize(&p);
    }
    // Iterative refinement on the residual; usually a no-op.
    let target = tol::scaled::<T>(tol::LYAPUNOV_RESIDUAL) * lit::<T>(0.1);
    for _ in 0..2 {
        let r = residual_matrix(f, &p, q);
        if r.norm() <= target * (T::one() + p.norm()) {
            break;
        }
        let mut correction = transformed(&r)?;
        if symmetric_rhs {
            correction = symmetrize(&correction);
        }
        p += correction;
    }
    Ok(p)
}

/// `F P + P Fᵀ + Q`.
pub fn residual_matrix<T: Real>(f: &DMatrix<T>, p: &DMatrix<T>, q: &DMatrix<T>) -> DMatrix<T> {
    f * p + p * f.transpose() + q
}

pub fn residual<T: Real>(f: &DMatrix<T>, p: &DMatrix<T>, q: &DMatrix<T>) -> T {
    residual_matrix(f, p, q).norm()
}

/// Dense reference solver through `(I ⊗ F + F ⊗ I) vec P = −vec Q`.
/// Cost is O(n⁶); meant for cross-checks at small n.
pub fn solve_lyapunov_kronecker<T: Real>(f: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_dims(f, q)?;
    let n = f.nrows();
    let eye = DMatrix::<T>::identity(n, n);
    let op = eye.kronecker(f) + f.kronecker(&eye);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-q).as_slice());
    let x = solve(&op, &rhs)?;
    Ok(DMatrix::from_column_slice(n, n, x.as_slice()))
}

fn check_dims<T: Real>(f: &DMatrix<T>, q: &DMatrix<T>) -> Result<()> {
    if f.nrows() != f.ncols() || q.shape() != f.shape() {
        return Err(CodesignError::Dimension(format!(
            "Lyapunov: F is {:?}, Q is {:?}",
            f.shape(),
            q.shape()
        )));
    }
    Ok(())
}

/// `(start, size)` of the 1×1 and 2×2 diagonal blocks of a quasi-triangular matrix.
fn diagonal_blocks<T: Real>(t: &DMatrix<T>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let scale = t.norm();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)].abs() > T::default_epsilon() * scale {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solves `T Y + Y Tᵀ = C` for quasi-upper-triangular `T`.
fn solve_quasi_triangular<T: Real>(
    t: &DMatrix<T>,
    blocks: &[(usize, usize)],
    c: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let n = t.nrows();
    let mut y = DMatrix::<T>::zeros(n, n);
    for &(j0, q) in blocks.iter().rev() {
        let j_end = j0 + q;
        for &(i0, p) in blocks.iter().rev() {
            let i_end = i0 + p;
            let mut rhs = c.view((i0, j0), (p, q)).into_owned();
            if i_end < n {
                rhs -= t.view((i0, i_end), (p, n - i_end)) * y.view((i_end, j0), (n - i_end, q));
            }
            if j_end < n {
                rhs -= y.view((i0, j_end), (p, n - j_end))
                    * t.view((j0, j_end), (q, n - j_end)).transpose();
            }
            let tii = t.view((i0, i0), (p, p)).into_owned();
            let tjj = t.view((j0, j0), (q, q)).into_owned();
            let block = small_sylvester(&tii, &tjj, &rhs)?;
            y.view_mut((i0, j0), (p, q)).copy_from(&block);
        }
    }
    Ok(y)
}

/// `Tᵢᵢ Y + Y Tⱼⱼᵀ = R` for blocks of size ≤ 2.
fn small_sylvester<T: Real>(tii: &DMatrix<T>, tjj: &DMatrix<T>, r: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (p, q) = (tii.nrows(), tjj.nrows());
    if p == 1 && q == 1 {
        let d = tii[(0, 0)] + tjj[(0, 0)];
        if d == T::zero() {
            return Err(CodesignError::Decomposition("singular Lyapunov block"));
        }
        return Ok(DMatrix::from_element(1, 1, r[(0, 0)] / d));
    }
    let op = DMatrix::<T>::identity(q, q).kronecker(tii) + tjj.kronecker(&DMatrix::<T>::identity(p, p));
    let rhs = DMatrix::from_column_slice(p * q, 1, r.as_slice());
    let x = solve(&op, &rhs)?;
    Ok(DMatrix::from_column_slice(p, q, x.as_slice()))
}
