use serde::{Deserialize, Serialize};

use crate::design::SparseSignal;
use crate::error::{Error, Result};
use crate::linalg::{inf_norm, DenseMatrix};

/// Probe step used by [`estimate_wmax`].
pub const DEFAULT_ETA_TILDE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WmaxEstimate {
    pub z_hat: f64,
    pub f_max: f64,
    pub eta_tilde: f64,
    /// Set when the probe step moved nothing (`f_max <= 1`).
    pub degenerate: bool,
}

impl WmaxEstimate {
    /// `3 eta_tilde / (20 (f_max - 1))`, i.e. `1 / (20 z_hat)`.
    pub fn production_eta(&self) -> Option<f64> {
        (!self.degenerate).then(|| 1.0 / (20.0 * self.z_hat))
    }
}

/// One probe step from `u = v = 1`: `z_hat = (f_max - 1) / (3 eta_tilde)`.
///
/// `f_max - 1` is taken as `||r||_inf` directly rather than by subtracting
/// one from `1 + ||r||_inf`, which would cancel most of the digits at
/// `eta_tilde = 1e-10`.
pub fn estimate_wmax(x: &DenseMatrix, y: &[f64], eta_tilde: f64) -> Result<WmaxEstimate> {
    if y.len() != x.rows() {
        return Err(Error::dim("estimate_wmax", x.rows(), y.len()));
    }
    if !(eta_tilde > 0.0) || !eta_tilde.is_finite() {
        return Err(Error::param(format!("eta_tilde must be positive, got {eta_tilde}")));
    }
    // At u = v = 1 we have w = 0, so the gradient is -X^T y / n.
    let mut g = vec![0.0; x.cols()];
    x.t_apply_into(y, &mut g);
    let r_max = 4.0 * eta_tilde * inf_norm(&g) / x.rows() as f64;
    let degenerate = !(r_max > 0.0);
    Ok(WmaxEstimate {
        z_hat: if degenerate { 0.0 } else { r_max / (3.0 * eta_tilde) },
        f_max: 1.0 + r_max,
        eta_tilde,
        degenerate,
    })
}

/// `w_max / (w_min max eps max maxnoise)`, clamped below at 1.
pub fn kappa_eff_of(signal: &SparseSignal, eps: f64, maxnoise: f64) -> f64 {
    kappa_eff(signal.w_max, signal.w_min, eps, maxnoise)
}

fn kappa_eff(w_max: f64, w_min: f64, eps: f64, maxnoise: f64) -> f64 {
    let floor = w_min.max(eps).max(maxnoise);
    if floor > 0.0 {
        (w_max / floor).max(1.0)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecommendedSettings {
    pub kappa_eff: f64,
    pub delta_budget: f64,
    pub alpha_budget: f64,
    pub eta_budget: f64,
    pub t_budget_alg1: usize,
    pub t_budget_alg2: usize,
}

fn to_count(x: f64) -> usize {
    if x.is_finite() {
        x.ceil().max(0.0) as usize
    } else {
        usize::MAX
    }
}

/// Parameter and iteration budgets from `w_max`, `w_min`, the target
/// precision `eps` and the max-noise level.
///
/// The iteration budgets are `c * kappa_eff / (eta w_max) * ln(1/alpha)` and
/// `c * (1 max ln kappa_eff) * ln(1/alpha)` with `c = constant`.
/// With `eps = 0` the initialization budget is zero and both iteration
/// budgets saturate at `usize::MAX`.
pub fn recommended_settings(
    w_max_hat: f64,
    w_min: f64,
    eps: f64,
    d: usize,
    k: usize,
    maxnoise: f64,
    constant: f64,
) -> RecommendedSettings {
    let kappa_eff = kappa_eff(w_max_hat, w_min, eps, maxnoise);
    let log_kappa = kappa_eff.ln().max(1.0);
    let delta_budget = 1.0 / ((k.max(1) as f64).sqrt() * log_kappa);
    let side = (2.0 * d as f64 + 1.0).powi(2).max(w_max_hat * w_max_hat);
    let alpha_budget = ((eps * eps).min(eps).min(1.0) / side).min(w_min.sqrt() / 2.0);
    let eta_budget = 1.0 / (20.0 * w_max_hat);
    let log_alpha = (1.0 / alpha_budget).ln();
    RecommendedSettings {
        kappa_eff,
        delta_budget,
        alpha_budget,
        eta_budget,
        t_budget_alg1: to_count(constant * kappa_eff / (eta_budget * w_max_hat) * log_alpha),
        t_budget_alg2: to_count(constant * log_kappa * log_alpha),
    }
}

/// Noiseless orthonormal budget `ln(w_max / alpha^2) / (eta w_min)`.
pub fn simplified_budget(w_max: f64, w_min: f64, alpha: f64, eta: f64) -> usize {
    to_count((w_max / (alpha * alpha)).ln() / (eta * w_min))
}
