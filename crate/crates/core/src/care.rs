//! Continuous algebraic Riccati equation `AᵀP + PA − PWP + Q = 0`.
//!
//! The stabilizing solution is read off the stable invariant subspace of the
//! Hamiltonian `H = [A, −W; −Q, −Aᵀ]`. That subspace is computed with the
//! scaled matrix-sign iteration, `P` is recovered by least squares, and the
//! result is polished with Newton–Kleinman steps, each of which is a
//! Lyapunov solve, until the residual certificate holds. When the subspace
//! is too ill-conditioned to give a stabilizing first guess, Newton–Kleinman
//! starts from a Bass-type stabilizing gain instead.

use nalgebra::DMatrix;

use crate::error::{CodesignError, Result};
use crate::linalg::{eigenvalues, log_abs_det, lstsq, spectral_abscissa, symmetrize};
use crate::lyapunov::solve_lyapunov;
use crate::{lit, to_f64, tol, Real};

const SIGN_MAX_ITERS: usize = 100;
const NEWTON_MAX_STEPS: usize = 60;

/// Stabilizing PSD solution of `AᵀP + PA − PWP + Q = 0`.
///
/// With `W = 0` the equation is the Lyapunov equation `AᵀP + PA + Q = 0`,
/// which has a stabilizing solution only when `A` itself is Hurwitz.
pub fn solve_care<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>, q: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = a.nrows();
    if a.ncols() != n || w.shape() != (n, n) || q.shape() != (n, n) {
        return Err(CodesignError::Dimension(format!(
            "CARE: A {:?}, W {:?}, Q {:?}",
            a.shape(),
            w.shape(),
            q.shape()
        )));
    }
    if w.norm() == T::zero() {
        return solve_lyapunov(&a.transpose(), q).map_err(|e| match e {
            CodesignError::NotHurwitz { max_real } => CodesignError::NoStabilizingSolution {
                margin: max_real.abs(),
            },
            other => other,
        });
    }

    let h = hamiltonian(a, w, q);
    let h_scale = T::one().max(h.norm());
    let axis_margin = eigenvalues(&h)?
        .iter()
        .map(|z| z.re.abs())
        .fold(T::max_value().unwrap_or(T::one() / T::default_epsilon()), |x, y| x.min(y));
    if axis_margin <= tol::scaled::<T>(tol::HAMILTONIAN_AXIS) * h_scale {
        return Err(CodesignError::NoStabilizingSolution {
            margin: to_f64(axis_margin),
        });
    }

    let sign = matrix_sign(&h)?;
    let w11 = sign.view((0, 0), (n, n));
    let w12 = sign.view((0, n), (n, n));
    let w21 = sign.view((n, 0), (n, n));
    let w22 = sign.view((n, n), (n, n));
    let eye = DMatrix::<T>::identity(n, n);
    let mut lhs = DMatrix::<T>::zeros(2 * n, n);
    lhs.view_mut((0, 0), (n, n)).copy_from(&w12);
    lhs.view_mut((n, 0), (n, n)).copy_from(&(w22 + &eye));
    let mut rhs = DMatrix::<T>::zeros(2 * n, n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&(-(w11 + &eye)));
    rhs.view_mut((n, 0), (n, n)).copy_from(&(-w21));
    let guess = symmetrize(&lstsq(&lhs, &rhs)?);
    let not_stabilizing = || CodesignError::NoStabilizingSolution {
        margin: to_f64(axis_margin),
    };
    // An ill-conditioned stable subspace can give a non-stabilizing guess;
    // Newton–Kleinman then restarts from a shifted-Lyapunov gain instead.
    let mut p = if stabilizes(a, w, &guess)? {
        guess
    } else {
        bass_start(a, w).ok_or_else(not_stabilizing)?
    };

    let target = tol::scaled::<T>(tol::CARE_RESIDUAL);
    let mut res = residual(a, w, q, &p);
    for _ in 0..NEWTON_MAX_STEPS {
        if !stabilizes(a, w, &p)? {
            return Err(not_stabilizing());
        }
        let closed = a - w * &p;
        let forcing = q + &p * w * &p;
        let next = symmetrize(&solve_lyapunov(&closed.transpose(), &forcing)?);
        let next_res = residual(a, w, q, &next);
        let accepted = res <= target * (T::one() + p.norm_squared());
        // Once converged, further steps only trade roundoff.
        if accepted && next_res >= res {
            break;
        }
        p = next;
        res = next_res;
        if res <= lit::<T>(0.01) * target * (T::one() + p.norm_squared()) {
            break;
        }
    }
    if res > target * (T::one() + p.norm_squared()) {
        return Err(CodesignError::NonConvergence {
            what: "Newton–Kleinman refinement",
            iterations: NEWTON_MAX_STEPS,
            residual: to_f64(res),
        });
    }
    if !stabilizes(a, w, &p)? {
        return Err(not_stabilizing());
    }
    Ok(p)
}

fn stabilizes<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>, p: &DMatrix<T>) -> Result<bool> {
    Ok(spectral_abscissa(&(a - w * p))? < -tol::scaled::<T>(tol::HURWITZ_MARGIN))
}

/// `P₀ = Z⁻¹` with `(A + βI)Z + Z(A + βI)ᵀ = 2W` and `β > max |Re λ(A)|`,
/// for which `A − WP₀` has spectral abscissa at most `−β`. Needs `(A, W)`
/// controllable.
fn bass_start<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>) -> Option<DMatrix<T>> {
    let n = a.nrows();
    let beta = a.norm() + T::one();
    let shifted = -(a + DMatrix::<T>::identity(n, n) * beta);
    let z = solve_lyapunov(&shifted, &(w * lit::<T>(2.0))).ok()?;
    let p = symmetrize(&z.try_inverse()?);
    p.iter().all(|x| x.is_finite()).then_some(p)
}

/// Frobenius norm of `AᵀP + PA − PWP + Q`.
pub fn residual<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>, q: &DMatrix<T>, p: &DMatrix<T>) -> T {
    (a.transpose() * p + p * a - p * w * p + q).norm()
}

pub fn hamiltonian<T: Real>(a: &DMatrix<T>, w: &DMatrix<T>, q: &DMatrix<T>) -> DMatrix<T> {
    let n = a.nrows();
    let mut h = DMatrix::<T>::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-w));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
    h
}

/// Newton iteration for sign(H) with determinant scaling.
fn matrix_sign<T: Real>(h: &DMatrix<T>) -> Result<DMatrix<T>> {
    let dim = lit::<T>(h.nrows() as f64);
    let mut z = h.clone();
    let stop = T::default_epsilon().sqrt() * lit::<T>(1e-2);
    let mut change = T::one();
    for iter in 0..SIGN_MAX_ITERS {
        let inv = z
            .clone()
            .try_inverse()
            .ok_or(CodesignError::NoStabilizingSolution { margin: 0.0 })?;
        // Scaling speeds up the early phase; it is dropped near convergence.
        let scale = if change > lit::<T>(1e-2) {
            match log_abs_det(&z) {
                Some(ld) => (-ld / dim).exp(),
                None => T::one(),
            }
        } else {
            T::one()
        };
        let next = (&z * scale + inv / scale) * lit::<T>(0.5);
        change = (&next - &z).norm() / next.norm();
        z = next;
        if change <= stop {
            // One more unscaled step lands on the quadratic-convergence floor.
            let inv = z
                .clone()
                .try_inverse()
                .ok_or(CodesignError::NoStabilizingSolution { margin: 0.0 })?;
            z = (&z + inv) * lit::<T>(0.5);
            return Ok(z);
        }
        if iter + 1 == SIGN_MAX_ITERS {
            break;
        }
    }
    Err(CodesignError::NonConvergence {
        what: "matrix sign iteration",
        iterations: SIGN_MAX_ITERS,
        residual: to_f64(change),
    })
}
