#![allow(dead_code)]

use codesign_core::Plant;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn gaussian_matrix<R: Rng>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    gaussian_matrix(n, n, rng).qr().q()
}

pub fn random_skew<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(n, n, rng);
    (&g - g.transpose()) * 0.5
}

/// Negative eigenvalues in `[-3, -0.2]`, pairwise separated by at least `gap`.
pub fn random_spectrum<R: Rng>(n: usize, gap: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let mut eigs: Vec<f64> = (0..n).map(|_| -rng.random_range(0.2..3.0)).collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if eigs.windows(2).all(|w| w[0] - w[1] > gap) {
            return eigs;
        }
    }
}

pub fn symmetric_from<R: Rng>(eigs: &[f64], rng: &mut R) -> DMatrix<f64> {
    let q = random_orthogonal(eigs.len(), rng);
    let a = &q * DMatrix::from_diagonal(&DVector::from_row_slice(eigs)) * q.transpose();
    (&a + a.transpose()) * 0.5
}

pub fn random_symmetric_plant<R: Rng>(n: usize, eps: f64, delta: f64, rng: &mut R) -> Plant<f64> {
    let eigs = random_spectrum(n, 0.05, rng);
    Plant::new(symmetric_from(&eigs, rng), eps, delta).unwrap()
}

/// General (nonsymmetric) Hurwitz matrix with spectral abscissa below −0.2.
pub fn random_hurwitz<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = gaussian_matrix(n, n, rng) * 0.6;
    let shift = codesign_core::linalg::spectral_abscissa(&g).unwrap() + rng.random_range(0.2..1.5);
    g - DMatrix::identity(n, n) * shift
}

/// `L` of a random connected weighted graph: a spanning path plus random extra edges.
pub fn random_laplacian<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let add = |i: usize, j: usize, w: f64, l: &mut DMatrix<f64>| {
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    };
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for k in 1..n {
        let w = rng.random_range(0.5..2.0);
        add(order[k - 1], order[k], w, &mut l);
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.4) {
                let w = rng.random_range(0.1..1.5);
                add(i, j, w, &mut l);
            }
        }
    }
    l
}

/// Central difference of `f` at 0.
pub fn central_diff(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - f(-h)) / (2.0 * h)
}

/// Richardson-extrapolated central difference, error O(h⁴).
pub fn richardson_diff(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    let d1 = central_diff(&f, h);
    let d2 = central_diff(&f, h / 2.0);
    (4.0 * d2 - d1) / 3.0
}
