//! Model parameters `beta = (nu, rho, tau)`: closed-form updates and the
//! data-driven starting point.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Result, ValseError};
use crate::freq::{sample_autocovariance, MeasurementSet};
use crate::support::{GramData, SupportState};

/// Absolute floor on `tau`.
pub const TAU_MIN: f64 = 1e-12;
const NU_FLOOR_REL: f64 = 1e-12;
const NU_FLOOR_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Noise variance.
    pub nu: f64,
    /// Activation probability.
    pub rho: f64,
    /// Prior variance of an active weight.
    pub tau: f64,
}

impl Hyperparams {
    pub fn new(nu: f64, rho: f64, tau: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return invalid(format!("nu must be positive and finite, got {nu}"));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return invalid(format!("rho must lie in (0, 1), got {rho}"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return invalid(format!("tau must be positive and finite, got {tau}"));
        }
        Ok(Self { nu, rho, tau })
    }
}

/// `nu_min = 1e-12 (||y||^2 / M + eps)`.
pub fn nu_floor(mset: &MeasurementSet) -> f64 {
    let power = mset.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() / mset.len() as f64;
    NU_FLOOR_REL * (power + NU_FLOOR_EPS)
}

/// `rho` is kept inside `[1/(2N), 1 - 1/(2N)]`.
pub fn clamp_rho(rho: f64, n: usize) -> f64 {
    let lo = 0.5 / n as f64;
    rho.clamp(lo, 1.0 - lo)
}

/// `M * nu_hat` before flooring: residual energy, weight uncertainty and
/// frequency uncertainty.
pub fn noise_statistic(
    mset: &MeasurementSet,
    support: &SupportState,
    gram: &GramData,
    moments: &[Vec<Complex64>],
) -> f64 {
    let m = mset.len() as f64;
    let mut resid: Vec<Complex64> = mset.samples().to_vec();
    for (&i, &w) in support.active().iter().zip(support.w_hat()) {
        for (r, a) in resid.iter_mut().zip(&moments[i]) {
            *r -= w * a;
        }
    }
    let fit: f64 = resid.iter().map(|r| r.norm_sqr()).sum();

    let act = support.active();
    let c = support.c_hat();
    let mut trace = 0.0;
    // tr(J_S C)
    for (p, &i) in act.iter().enumerate() {
        for (q, &l) in act.iter().enumerate() {
            trace += (gram.j[(i, l)] * c[(q, p)]).re;
        }
    }

    let spread: f64 = act
        .iter()
        .zip(support.w_hat())
        .map(|(&i, w)| {
            let a2: f64 = moments[i].iter().map(|v| v.norm_sqr()).sum();
            w.norm_sqr() * (m - a2)
        })
        .sum();
    fit + trace + spread
}

/// Noise-variance update, floored at [`nu_floor`].
pub fn update_noise_var(
    mset: &MeasurementSet,
    support: &SupportState,
    gram: &GramData,
    moments: &[Vec<Complex64>],
) -> f64 {
    let nu = noise_statistic(mset, support, gram, moments) / mset.len() as f64;
    nu.max(nu_floor(mset))
}

/// `(rho_hat, tau_hat)`; `tau_prev` is kept when the support is empty.
pub fn update_rho_tau(support: &SupportState, tau_prev: f64) -> (f64, f64) {
    let n = support.support().len();
    let k = support.size();
    let rho = clamp_rho(k as f64 / n as f64, n);
    if k == 0 {
        return (rho, tau_prev);
    }
    let energy: f64 = support.w_hat().iter().map(|w| w.norm_sqr()).sum();
    let trace: f64 = (0..k).map(|p| support.c_hat()[(p, p)].re).sum();
    (rho, ((energy + trace) / k as f64).max(TAU_MIN))
}

/// Estimate of `E[y y^H]` with entry `(a, b)` set to the sample
/// autocovariance at lag `m_a - m_b` (Toeplitz in the sample index).
pub fn toeplitz_covariance(mset: &MeasurementSet) -> DMatrix<Complex64> {
    let gamma = sample_autocovariance(mset);
    let idx = mset.indices();
    let m = mset.len();
    DMatrix::from_fn(m, m, |a, b| {
        let lag = idx[a].abs_diff(idx[b]);
        let g = gamma.get(lag).copied().flatten().unwrap_or_default();
        if a >= b {
            g
        } else {
            g.conj()
        }
    })
}

/// Eigenvalues of [`toeplitz_covariance`], ascending.
pub fn covariance_eigenvalues(mset: &MeasurementSet) -> Vec<f64> {
    let mut eig: Vec<f64> = toeplitz_covariance(mset)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Starting values: `nu` from the lower quarter of the Toeplitz
/// eigenvalues, `rho = 1/2`, `tau` from the remaining power.
pub fn init_hyperparams(mset: &MeasurementSet) -> Result<Hyperparams> {
    let m = mset.len();
    if m < 2 {
        return invalid(format!("initialization needs M >= 2, got {m}"));
    }
    let n = mset.signal_len() as f64;
    let eig = covariance_eigenvalues(mset);
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(ValseError::Degenerate("non-finite covariance eigenvalue".into()));
    }
    let q = m.div_ceil(4);
    let nu = (eig[..q].iter().map(|v| v.max(0.0)).sum::<f64>() / q as f64).max(nu_floor(mset));
    let rho = 0.5;
    let power = mset.samples().iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64;
    let mut tau = (power - nu) / (rho * n);
    if !(tau > 0.0) {
        tau = nu / n;
    }
    Hyperparams::new(nu, rho, tau.max(TAU_MIN))
}
