//! Gradient descent on `w = u*u - v*v` with constant (Algorithm 1) and
//! coordinate-wise doubling (Algorithm 2) step sizes.
//!
//! The loss is `(1/n) ||X w - y||^2`. One step multiplies `u` by `1 - r` and
//! `v` by `1 + r` where `r = 4 eta m * X^T (X w - y) / n`.

mod decompose;
mod settings;

pub use decompose::{decompose, ErrorDecomposition};
pub use settings::{
    estimate_wmax, kappa_eff_of, recommended_settings, simplified_budget, RecommendedSettings,
    WmaxEstimate, DEFAULT_ETA_TILDE,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist2_sq, inf_norm, DenseMatrix};

/// Iterates whose sup norm exceeds this multiple of `1 + z_hat` count as diverged.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct DescentState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Per-coordinate step multipliers; start at one and only ever double.
    pub m: Vec<f64>,
    pub base_eta: f64,
    pub t: usize,
    pub alpha: f64,
}

impl DescentState {
    /// `u = v = alpha * 1`, `m = 1`, `t = 0`.
    pub fn new(d: usize, alpha: f64, base_eta: f64) -> Self {
        Self {
            u: vec![alpha; d],
            v: vec![alpha; d],
            m: vec![1.0; d],
            base_eta,
            t: 0,
            alpha,
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn w(&self) -> Vec<f64> {
        self.u.iter().zip(&self.v).map(|(a, b)| a * a - b * b).collect()
    }

    fn write_w(&self, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(&self.u).zip(&self.v) {
            *o = a * a - b * b;
        }
    }
}

/// Which norm a [`TargetStop`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetNorm {
    Linf,
    /// Squared Euclidean distance.
    L2Sq,
}

/// Stop as soon as `w_t` is within `tol` of `w_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetStop {
    pub w_star: Vec<f64>,
    pub norm: TargetNorm,
    pub tol: f64,
}

/// Stop when the error part `e_t` (mass off the support or of the wrong
/// sign) exceeds `threshold` in sup norm. Needs the sign pattern of `w*`,
/// which is why it is optional.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyStop {
    pub threshold: f64,
    /// `+1`, `-1` or `0` per coordinate.
    pub signs: Vec<i8>,
}

impl SafetyStop {
    /// The usual `sqrt(alpha)` cap.
    pub fn sqrt_alpha(alpha: f64, signs: Vec<i8>) -> Self {
        Self {
            threshold: alpha.sqrt(),
            signs,
        }
    }

    fn error_sup(&self, state: &DescentState) -> f64 {
        let mut worst = 0.0_f64;
        for j in 0..state.dim() {
            let (wp, wm) = (state.u[j] * state.u[j], state.v[j] * state.v[j]);
            let e = match self.signs[j] {
                0 => wp - wm,
                1 => -wm,
                _ => wp,
            };
            worst = worst.max(e.abs());
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub eta: f64,
    pub alpha: f64,
    pub max_iters: usize,
    /// Doubling period multiplier; Algorithm 2 only.
    pub tau: usize,
    /// Estimate of `w_max`; required by Algorithm 2, optional otherwise.
    pub z_hat: Option<f64>,
    pub snapshot_every: usize,
    pub safety_stop: Option<SafetyStop>,
    pub target: Option<TargetStop>,
}

impl DescentConfig {
    pub fn new(eta: f64, alpha: f64, max_iters: usize) -> Self {
        Self {
            eta,
            alpha,
            max_iters,
            tau: 10,
            z_hat: None,
            snapshot_every: 10,
            safety_stop: None,
            target: None,
        }
    }

    fn validate(&self, d: usize) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::param(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::param(format!("alpha must be positive, got {}", self.alpha)));
        }
        if self.snapshot_every == 0 {
            return Err(Error::param("snapshot_every must be at least 1"));
        }
        if let Some(s) = &self.safety_stop {
            if s.signs.len() != d {
                return Err(Error::dim("safety stop signs", d, s.signs.len()));
            }
        }
        if let Some(t) = &self.target {
            if t.w_star.len() != d {
                return Err(Error::dim("target w_star", d, t.w_star.len()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    MaxIters,
    SafetyStop,
    TargetReached,
    /// Only seen on the partial trajectory carried by a divergence error.
    Divergence,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::MaxIters => "max-iters",
            StopReason::SafetyStop => "safety-stop",
            StopReason::TargetReached => "target-reached",
            StopReason::Divergence => "divergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `(t, w_t)` with strictly increasing `t`.
    pub snapshots: Vec<(usize, Vec<f64>)>,
    pub final_state: DescentState,
    pub stop_reason: StopReason,
}

fn check_xy(x: &DenseMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::dim("response length", x.rows(), y.len()));
    }
    Ok(())
}

/// Multiplicative factors `(1 - r, 1 + r)` with `r = 4 eta_vec * X^T (X w - y) / n`.
pub fn gradient_factors(
    x: &DenseMatrix,
    y: &[f64],
    w: &[f64],
    eta_vec: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_xy(x, y)?;
    if w.len() != x.cols() {
        return Err(Error::dim("gradient_factors w", x.cols(), w.len()));
    }
    if eta_vec.len() != x.cols() {
        return Err(Error::dim("gradient_factors eta", x.cols(), eta_vec.len()));
    }
    let mut ws = Workspace::new(x.rows(), x.cols());
    ws.gradient(x, y, w);
    let r: Vec<f64> = ws.grad.iter().zip(eta_vec).map(|(g, e)| 4.0 * e * g).collect();
    Ok((
        r.iter().map(|ri| 1.0 - ri).collect(),
        r.iter().map(|ri| 1.0 + ri).collect(),
    ))
}

/// One step of gradient descent with step `base_eta * m`.
pub fn gd_step(state: &DescentState, x: &DenseMatrix, y: &[f64]) -> Result<DescentState> {
    check_xy(x, y)?;
    if state.dim() != x.cols() {
        return Err(Error::dim("gd_step state", x.cols(), state.dim()));
    }
    let mut next = state.clone();
    let mut ws = Workspace::new(x.rows(), x.cols());
    ws.step(&mut next, x, y);
    if let Some(j) = next.u.iter().chain(&next.v).position(|z| !z.is_finite()) {
        return Err(Error::Divergence {
            iteration: next.t,
            sup_norm: if j < next.dim() { next.u[j].abs() } else { f64::INFINITY },
            partial: Box::new(Trajectory {
                snapshots: Vec::new(),
                final_state: state.clone(),
                stop_reason: StopReason::Divergence,
            }),
        });
    }
    Ok(next)
}

/// Scratch buffers reused across iterations.
struct Workspace {
    w: Vec<f64>,
    resid: Vec<f64>,
    grad: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, d: usize) -> Self {
        Self {
            w: vec![0.0; d],
            resid: vec![0.0; n],
            grad: vec![0.0; d],
        }
    }

    /// `grad = X^T (X w - y) / n`.
    fn gradient(&mut self, x: &DenseMatrix, y: &[f64], w: &[f64]) {
        x.apply_into(w, &mut self.resid);
        for (r, yi) in self.resid.iter_mut().zip(y) {
            *r -= yi;
        }
        x.t_apply_into(&self.resid, &mut self.grad);
        let inv_n = 1.0 / x.rows() as f64;
        self.grad.iter_mut().for_each(|g| *g *= inv_n);
    }

    fn step(&mut self, state: &mut DescentState, x: &DenseMatrix, y: &[f64]) {
        state.write_w(&mut self.w);
        let w = std::mem::take(&mut self.w);
        self.gradient(x, y, &w);
        self.w = w;
        let four_eta = 4.0 * state.base_eta;
        for j in 0..state.dim() {
            let r = four_eta * state.m[j] * self.grad[j];
            state.u[j] *= 1.0 - r;
            state.v[j] *= 1.0 + r;
        }
        state.t += 1;
        state.write_w(&mut self.w);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Constant,
    Doubling,
}

pub fn run_alg1(x: &DenseMatrix, y: &[f64], cfg: &DescentConfig) -> Result<Trajectory> {
    run(x, y, cfg, Variant::Constant)
}

/// Algorithm 2. At `t = k * tau * ceil(ln(1/alpha))` for `k >= 2` the step
/// multiplier of every coordinate with `u^2 max v^2 <= 2^(-k-1) z_hat` doubles.
pub fn run_alg2(x: &DenseMatrix, y: &[f64], cfg: &DescentConfig) -> Result<Trajectory> {
    run(x, y, cfg, Variant::Doubling)
}

/// Iterations between doubling checks, `tau * ceil(ln(1/alpha))`.
pub fn doubling_period(tau: usize, alpha: f64) -> usize {
    tau * ((1.0 / alpha).ln().ceil().max(1.0) as usize)
}

fn run(x: &DenseMatrix, y: &[f64], cfg: &DescentConfig, variant: Variant) -> Result<Trajectory> {
    check_xy(x, y)?;
    let d = x.cols();
    cfg.validate(d)?;
    let z_hat = match (variant, cfg.z_hat) {
        (Variant::Doubling, Some(z)) if z > 0.0 && z.is_finite() => z,
        (Variant::Doubling, _) => return Err(Error::param("Algorithm 2 needs z_hat > 0")),
        (Variant::Constant, Some(z)) => z,
        (Variant::Constant, None) => {
            // Without an estimate, the gradient at zero sets the scale.
            let mut g = vec![0.0; d];
            x.t_apply_into(y, &mut g);
            inf_norm(&g) / x.rows() as f64
        }
    };
    if variant == Variant::Doubling && cfg.tau == 0 {
        return Err(Error::param("tau must be at least 1"));
    }
    let blowup = DIVERGENCE_FACTOR * (1.0 + z_hat);
    let period = doubling_period(cfg.tau.max(1), cfg.alpha);

    let mut state = DescentState::new(d, cfg.alpha, cfg.eta);
    let mut ws = Workspace::new(x.rows(), d);
    let mut snapshots: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut stop_reason = StopReason::MaxIters;

    while state.t < cfg.max_iters {
        let prev = state.clone();
        ws.step(&mut state, x, y);

        let sup = ws.w.iter().fold(0.0_f64, |m, z| if z.is_finite() { m.max(z.abs()) } else { f64::INFINITY });
        if !(sup <= blowup) {
            return Err(Error::Divergence {
                iteration: state.t,
                sup_norm: sup,
                partial: Box::new(Trajectory {
                    snapshots,
                    final_state: prev,
                    stop_reason: StopReason::Divergence,
                }),
            });
        }

        if let Some(s) = &cfg.safety_stop {
            if s.error_sup(&state) > s.threshold {
                // The offending iterate is not kept.
                stop_reason = StopReason::SafetyStop;
                state = prev;
                break;
            }
        }

        if variant == Variant::Doubling && state.t % period == 0 && state.t / period >= 2 {
            let k = (state.t / period) as i32;
            let cut = 2f64.powi(-k - 1) * z_hat;
            for j in 0..d {
                let (a, b) = (state.u[j] * state.u[j], state.v[j] * state.v[j]);
                if a.max(b) <= cut {
                    state.m[j] *= 2.0;
                }
            }
        }

        let reached = cfg.target.as_ref().is_some_and(|tg| match tg.norm {
            TargetNorm::Linf => ws
                .w
                .iter()
                .zip(&tg.w_star)
                .all(|(a, b)| (a - b).abs() <= tg.tol),
            TargetNorm::L2Sq => dist2_sq(&ws.w, &tg.w_star) <= tg.tol,
        });

        if state.t % cfg.snapshot_every == 0 || reached {
            snapshots.push((state.t, ws.w.clone()));
        }
        if reached {
            stop_reason = StopReason::TargetReached;
            break;
        }
    }

    Ok(Trajectory {
        snapshots,
        final_state: state,
        stop_reason,
    })
}
