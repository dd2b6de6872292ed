//! Small dense linear-algebra helpers shared by the solvers.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{CodesignError, Result};
use crate::tol;
use crate::{lit, Real};

fn schur_of<T: Real>(m: &DMatrix<T>) -> Result<Schur<T, nalgebra::Dyn>> {
    Schur::try_new(m.clone(), T::default_epsilon(), 0)
        .ok_or(CodesignError::Decomposition("real Schur"))
}

/// Real Schur form `M = Q T Qᵀ`, returned as `(Q, T)`.
pub fn real_schur<T: Real>(m: &DMatrix<T>) -> Result<(DMatrix<T>, DMatrix<T>)> {
    Ok(schur_of(m)?.unpack())
}

/// Eigenvalues of a general real square matrix.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(schur_of(m)?.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum of `m`.
pub fn spectral_abscissa<T: Real>(m: &DMatrix<T>) -> Result<T> {
    let eigs = eigenvalues(m)?;
    Ok(eigs
        .iter()
        .map(|z| z.re)
        .fold(T::min_value().unwrap_or(-T::one() / T::default_epsilon()), |a, b| a.max(b)))
}

/// Errors with `NotHurwitz` unless every eigenvalue has real part below the
/// Hurwitz margin.
pub fn ensure_hurwitz<T: Real>(m: &DMatrix<T>) -> Result<()> {
    let abscissa = spectral_abscissa(m)?;
    if abscissa >= -tol::scaled::<T>(tol::HURWITZ_MARGIN) {
        return Err(CodesignError::NotHurwitz {
            max_real: crate::to_f64(abscissa),
        });
    }
    Ok(())
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order
/// and each eigenvector signed so its largest-magnitude entry is positive.
pub fn sym_eigen_desc<T: Real>(m: &DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = m.nrows();
    let eig = SymmetricEigen::try_new(symmetrize(m), T::default_epsilon(), 0)
        .ok_or(CodesignError::Decomposition("symmetric eigen"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let pivot = col.iter().copied().fold(T::zero(), |best, x| {
            if x.abs() > best.abs() {
                x
            } else {
                best
            }
        });
        if pivot < T::zero() {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok((values, vectors))
}

pub fn symmetrize<T: Real>(m: &DMatrix<T>) -> DMatrix<T> {
    (m + m.transpose()) * lit::<T>(0.5)
}

pub fn asymmetry<T: Real>(m: &DMatrix<T>) -> T {
    (m - m.transpose()).norm()
}

/// `[X, Y] = XY − YX`.
pub fn commutator<T: Real>(x: &DMatrix<T>, y: &DMatrix<T>) -> DMatrix<T> {
    x * y - y * x
}

pub fn outer<T: Real>(u: &DVector<T>, v: &DVector<T>) -> DMatrix<T> {
    u * v.transpose()
}

/// `(I − vvᵀ) w` for a unit vector `v`.
pub fn project_out<T: Real>(v: &DVector<T>, w: &DVector<T>) -> DVector<T> {
    w - v * v.dot(w)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_sym_eigenvalue<T: Real>(m: &DMatrix<T>) -> Result<T> {
    if m.nrows() == 0 {
        return Ok(T::zero());
    }
    let (vals, _) = sym_eigen_desc(m)?;
    Ok(vals[vals.len() - 1])
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(m: &DMatrix<T>) -> Result<DVector<T>> {
    let svd = SVD::try_new(m.clone(), false, false, T::default_epsilon(), 0)
        .ok_or(CodesignError::Decomposition("SVD"))?;
    let mut s: Vec<T> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    Ok(DVector::from_vec(s))
}

/// Least-squares solution of `M X = R` through the SVD.
pub fn lstsq<T: Real>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
    let svd = SVD::try_new(m.clone(), true, true, T::default_epsilon(), 0)
        .ok_or(CodesignError::Decomposition("SVD"))?;
    let cutoff = svd.singular_values.max() * T::default_epsilon() * lit::<T>(m.nrows() as f64);
    svd.solve(rhs, cutoff)
        .map_err(|_| CodesignError::Decomposition("SVD solve"))
}

/// Solves the square system `M X = R` by LU.
pub fn solve<T: Real>(m: &DMatrix<T>, rhs: &DMatrix<T>) -> Result<DMatrix<T>> {
    m.clone()
        .lu()
        .solve(rhs)
        .ok_or(CodesignError::Decomposition("singular LU"))
}

/// Columns form an orthonormal basis of `v⊥` for a unit vector `v`
/// (the trailing columns of the Householder reflector taking `v` to ±e₁).
pub fn orthonormal_complement<T: Real>(v: &DVector<T>) -> DMatrix<T> {
    let n = v.len();
    let mut w = v.clone();
    let sign = if v[0] >= T::zero() { T::one() } else { -T::one() };
    w[0] += sign * v.norm();
    let wn2 = w.norm_squared();
    let mut h = DMatrix::<T>::identity(n, n);
    if wn2 > T::zero() {
        h -= &w * w.transpose() * (lit::<T>(2.0) / wn2);
    }
    h.columns(1, n.saturating_sub(1)).into_owned()
}

/// Angle between the lines spanned by `u` and `v`.
pub fn line_angle<T: Real>(u: &DVector<T>, v: &DVector<T>) -> T {
    let un = u.normalize();
    let vn = v.normalize();
    let along = un.dot(&vn);
    let perp = project_out(&vn, &un).norm();
    perp.atan2(along.abs())
}

/// Natural log of |det M| from the LU factors; `None` if singular.
pub fn log_abs_det<T: Real>(m: &DMatrix<T>) -> Option<T> {
    let lu = m.clone().lu();
    let u = lu.u();
    let mut acc = T::zero();
    for i in 0..u.nrows() {
        let d = u[(i, i)].abs();
        if d == T::zero() {
            return None;
        }
        acc += d.ln();
    }
    Some(acc)
}
