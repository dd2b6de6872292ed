//! The time-averaged LQG cost Φ and its derivatives.
//!
//! `Φ = tr(AᵀKΣ + ΣKA + K + Σ)`. Along a tangent `(ad_B Ω_B, ad_C Ω_C)` of
//! the orbit pair the derivative is `εδ(tr([B, KMK]Ω_B) + tr([C, ΣNΣ]Ω_C))`.

use nalgebra::DMatrix;

use crate::error::{CodesignError, Result};
use crate::gains::{adjoint_pair, closed_loops, gain_pair, AdjointPair, GainPair};
use crate::linalg::commutator;
use crate::lyapunov::solve_lyapunov;
use crate::plant::{Placement, Plant};
use crate::{tol, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport<T: Real> {
    pub phi: T,
    pub phi_bar: T,
    pub gains: GainPair<T>,
    pub adjoints: AdjointPair<T>,
}

/// The auxiliary potential evaluated three ways.
///
/// `trace` is the definition `tr(AᵀMN + NMA)`; the other two are the
/// Lyapunov-substituted forms `−tr(KBKM)` and `−tr(ΣCΣN)`. All three agree
/// when ε = δ = 0 and `A` is symmetric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiBarForms<T: Real> {
    pub trace: T,
    pub via_actuator: T,
    pub via_sensor: T,
}

/// `(∂Φ/∂r, ∂Φ/∂s)` where `r` and `s` replace ε and δ in the two AREs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSensitivity<T: Real> {
    pub dphi_dr: T,
    pub dphi_ds: T,
}

pub fn phi<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<T> {
    let gains = gain_pair(plant, placement)?;
    Ok(phi_from_gains(plant, &gains))
}

pub fn phi_from_gains<T: Real>(plant: &Plant<T>, gains: &GainPair<T>) -> T {
    let a = plant.a();
    let (k, s) = (&gains.k, &gains.sigma);
    (a.transpose() * k * s + s * k * a + k + s).trace()
}

pub fn phi_bar<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<T> {
    let gains = gain_pair(plant, placement)?;
    let adjoints = adjoint_pair(plant, placement, &gains)?;
    Ok(phi_bar_from(plant, &adjoints))
}

pub fn phi_bar_from<T: Real>(plant: &Plant<T>, adjoints: &AdjointPair<T>) -> T {
    let a = plant.a();
    let (m, n) = (&adjoints.m, &adjoints.n);
    (a.transpose() * m * n + n * m * a).trace()
}

pub fn phi_bar_forms<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<PhiBarForms<T>> {
    let gains = gain_pair(plant, placement)?;
    let adjoints = adjoint_pair(plant, placement, &gains)?;
    let kbk = &gains.k * placement.b_proj() * &gains.k;
    let scs = &gains.sigma * placement.c_proj() * &gains.sigma;
    Ok(PhiBarForms {
        trace: phi_bar_from(plant, &adjoints),
        via_actuator: -(kbk * &adjoints.m).trace(),
        via_sensor: -(scs * &adjoints.n).trace(),
    })
}

pub fn cost_report<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<CostReport<T>> {
    let gains = gain_pair(plant, placement)?;
    let adjoints = adjoint_pair(plant, placement, &gains)?;
    Ok(CostReport {
        phi: phi_from_gains(plant, &gains),
        phi_bar: phi_bar_from(plant, &adjoints),
        gains,
        adjoints,
    })
}

/// Partial derivatives of Φ in the actuation gain and the sensor SNR.
///
/// With `F = A − εBK` and `G = A − δΣC`, `K′ = −X` where
/// `FᵀX + XF + KBK = 0` and `Σ′ = −Y` where `GY + YGᵀ + ΣCΣ = 0`; then
/// `∂Φ/∂r = tr((AΣ + ΣAᵀ + I)K′)` and `∂Φ/∂s = tr((AᵀK + KA + I)Σ′)`.
pub fn phi_gain_sensitivity<T: Real>(plant: &Plant<T>, placement: &Placement<T>) -> Result<GainSensitivity<T>> {
    let gains = gain_pair(plant, placement)?;
    let (f, g) = closed_loops(plant, placement, &gains);
    let (k, s) = (&gains.k, &gains.sigma);
    let kbk = k * placement.b_proj() * k;
    let scs = s * placement.c_proj() * s;
    let dk = -solve_lyapunov(&f.transpose(), &kbk)?;
    let ds = -solve_lyapunov(&g, &scs)?;
    let a = plant.a();
    let n = plant.n();
    let eye = DMatrix::<T>::identity(n, n);
    let weight_k = a * s + s * a.transpose() + &eye;
    let weight_s = a.transpose() * k + k * a + &eye;
    Ok(GainSensitivity {
        dphi_dr: (weight_k * dk).trace(),
        dphi_ds: (weight_s * ds).trace(),
    })
}

fn check_skew<T: Real>(omega: &DMatrix<T>, n: usize) -> Result<()> {
    if omega.shape() != (n, n) {
        return Err(CodesignError::Dimension(format!(
            "tangent generator is {:?}, expected {n}×{n}",
            omega.shape()
        )));
    }
    let asym = (omega + omega.transpose()).norm();
    if asym > tol::scaled::<T>(tol::SKEW) {
        return Err(CodesignError::NotSkew(crate::to_f64(asym)));
    }
    Ok(())
}

/// Derivative of Φ along `v = (ad_B Ω_B, ad_C Ω_C)`, i.e. along the curve
/// `B(t) = e^{−tΩ_B} B e^{tΩ_B}` (and likewise for C).
pub fn directional_derivative<T: Real>(
    plant: &Plant<T>,
    placement: &Placement<T>,
    omega_b: &DMatrix<T>,
    omega_c: &DMatrix<T>,
) -> Result<T> {
    let n = plant.n();
    check_skew(omega_b, n)?;
    check_skew(omega_c, n)?;
    let gains = gain_pair(plant, placement)?;
    let adjoints = adjoint_pair(plant, placement, &gains)?;
    let s_b = &gains.k * &adjoints.m * &gains.k;
    let s_c = &gains.sigma * &adjoints.n * &gains.sigma;
    let term_b = (commutator(&placement.b_proj(), &s_b) * omega_b).trace();
    let term_c = (commutator(&placement.c_proj(), &s_c) * omega_c).trace();
    Ok(plant.eps_delta() * (term_b + term_c))
}
