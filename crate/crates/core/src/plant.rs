//! Problem data: the plant `(A, ε, δ)` and a placement `(b̄, c̄)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CodesignError, Result};
use crate::linalg::outer;
use crate::{tol, Real};

/// Stochastic linear plant `dx = Ax dt + b u dt + dw`, `dy = cᵀx dt + dν`
/// with `|b|² = ε` and `|c|² = δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant<T: Real> {
    a: DMatrix<T>,
    epsilon: T,
    delta: T,
}

impl<T: Real> Plant<T> {
    pub fn new(a: DMatrix<T>, epsilon: T, delta: T) -> Result<Self> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(CodesignError::Dimension(format!(
                "A must be square with n ≥ 1, got {}×{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if !a.iter().all(|x| x.is_finite()) {
            return Err(CodesignError::InvalidArgument("A has non-finite entries".into()));
        }
        if !(epsilon >= T::zero() && epsilon.is_finite()) {
            return Err(CodesignError::InvalidArgument("epsilon must be finite and ≥ 0".into()));
        }
        if !(delta >= T::zero() && delta.is_finite()) {
            return Err(CodesignError::InvalidArgument("delta must be finite and ≥ 0".into()));
        }
        Ok(Self { a, epsilon, delta })
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn epsilon(&self) -> T {
        self.epsilon
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Same system matrix with different gains.
    pub fn with_gains(&self, epsilon: T, delta: T) -> Result<Self> {
        Self::new(self.a.clone(), epsilon, delta)
    }

    /// `εδ`, the factor in front of the unscaled gradient flow.
    pub fn eps_delta(&self) -> T {
        self.epsilon * self.delta
    }

    /// True when εδ is small enough that the unscaled flow vanishes.
    pub fn is_singular_gain(&self) -> bool {
        self.eps_delta() < tol::scaled::<T>(tol::EPS_DELTA_SINGULAR)
    }

    pub fn is_symmetric(&self) -> bool {
        crate::linalg::asymmetry(&self.a) <= T::default_epsilon() * crate::lit::<T>(16.0) * (T::one() + self.a.norm())
    }
}

/// Unit actuator/sensor directions. The orbit point is `(b̄b̄ᵀ, c̄c̄ᵀ)`; the
/// physical vectors are `b = √ε b̄` and `c = √δ c̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement<T: Real> {
    b: DVector<T>,
    c: DVector<T>,
}

impl<T: Real> Placement<T> {
    /// Requires both vectors to be unit length within the placement tolerance.
    pub fn new(b: DVector<T>, c: DVector<T>) -> Result<Self> {
        if b.len() != c.len() || b.is_empty() {
            return Err(CodesignError::Dimension(format!(
                "b̄ and c̄ must have equal nonzero length, got {} and {}",
                b.len(),
                c.len()
            )));
        }
        let tol = tol::scaled::<T>(tol::UNIT_NORM);
        for (name, v) in [("b̄", &b), ("c̄", &c)] {
            if (v.norm() - T::one()).abs() > tol {
                return Err(CodesignError::InvalidArgument(format!(
                    "{name} is not unit length (|{name}| = {})",
                    crate::to_f64(v.norm())
                )));
            }
        }
        Ok(Self { b, c })
    }

    /// Normalizes both vectors.
    pub fn from_unnormalized(b: DVector<T>, c: DVector<T>) -> Result<Self> {
        let (nb, nc) = (b.norm(), c.norm());
        if nb == T::zero() || nc == T::zero() || !nb.is_finite() || !nc.is_finite() {
            return Err(CodesignError::InvalidArgument(
                "placement vectors must be nonzero and finite".into(),
            ));
        }
        Self::new(b / nb, c / nc)
    }

    pub fn b(&self) -> &DVector<T> {
        &self.b
    }

    pub fn c(&self) -> &DVector<T> {
        &self.c
    }

    pub fn n(&self) -> usize {
        self.b.len()
    }

    /// `B = b̄b̄ᵀ`.
    pub fn b_proj(&self) -> DMatrix<T> {
        outer(&self.b, &self.b)
    }

    /// `C = c̄c̄ᵀ`.
    pub fn c_proj(&self) -> DMatrix<T> {
        outer(&self.c, &self.c)
    }

    pub fn flipped(&self, flip_b: bool, flip_c: bool) -> Self {
        let b = if flip_b { -self.b.clone() } else { self.b.clone() };
        let c = if flip_c { -self.c.clone() } else { self.c.clone() };
        Self { b, c }
    }

    /// Sign convention used when comparing against analytic answers: the
    /// largest-magnitude entry of each vector is made positive.
    pub fn canonical(&self) -> Self {
        fn fix<T: Real>(v: &DVector<T>) -> DVector<T> {
            let pivot = v.iter().copied().fold(T::zero(), |b, x| if x.abs() > b.abs() { x } else { b });
            if pivot < T::zero() {
                -v.clone()
            } else {
                v.clone()
            }
        }
        Self {
            b: fix(&self.b),
            c: fix(&self.c),
        }
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.n() != n {
            return Err(CodesignError::Dimension(format!(
                "placement has dimension {}, plant has {}",
                self.n(),
                n
            )));
        }
        Ok(())
    }
}
