use crate::baselines::{lambda_max, lasso_path_with, log_grid, oracle_lambda_select, oracle_ls, LassoConfig};
use crate::descent::{
    estimate_wmax, run_alg1, run_alg2, DescentConfig, SafetyStop, Trajectory, DEFAULT_ETA_TILDE,
};
use crate::design::{gen_design, gen_noise, gen_signal, DesignKind, SparseSignal};
use crate::error::{Error, Result};
use crate::linalg::{dist2_sq, mat_apply, DenseMatrix};
use crate::rng::{Purpose, SeededRng};

use super::config::{EtaSetting, Estimator, ExperimentConfig, Family};

/// One estimator's outcome on one seeded instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub family: Family,
    pub axis_value: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Selected iteration for descent, selected `lambda` for the lasso.
    pub selected: Option<f64>,
    pub l2_error_sq: f64,
    pub linf_on_support: f64,
    pub linf_off_support: f64,
    pub iterations_used: usize,
    pub stop_reason: String,
    /// Failed records carry NaN metrics and are left out of percentiles.
    pub failed: bool,
}

/// Error metrics of a snapshot, recorded for trajectory plots.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub t: usize,
    pub l2_error_sq: f64,
    pub linf_off_support: f64,
    /// Values on the support, in support order.
    pub on_support: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub family: Family,
    pub axis_value: Option<f64>,
    pub trial: usize,
    pub estimator: Estimator,
    pub support: Vec<usize>,
    pub points: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialOutcome {
    pub records: Vec<TrialRecord>,
    pub traces: Vec<Trace>,
}

/// Training data, ground truth and a fresh validation set.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: DenseMatrix,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub signal: SparseSignal,
    pub x_val: DenseMatrix,
    pub y_val: Vec<f64>,
}

/// Seed of trial `trial`.
pub fn trial_seed(cfg: &ExperimentConfig, trial: usize) -> u64 {
    cfg.base_seed.wrapping_add(trial as u64)
}

/// Draw the instance for `seed` at concrete (unswept) settings. Validation
/// rows come from their own streams, `ceil(n / 4)` of them.
pub fn gen_instance(cfg: &ExperimentConfig, seed: u64) -> Result<Instance> {
    let rng = |p: Purpose| SeededRng::for_trial(seed, 0, p);
    let x = gen_design(cfg.design, cfg.n, cfg.d, &mut rng(Purpose::Design))?;
    let signal = gen_signal(&cfg.signal_spec(), &mut rng(Purpose::Signal))?;
    let xi = gen_noise(cfg.sigma, cfg.n, &mut rng(Purpose::Noise))?;
    let y = add(&mat_apply(&x, &signal.w_star)?, &xi);
    let n_val = cfg.n.div_ceil(4);
    // A scaled identity has no row law to resample; use sign rows instead.
    let val_kind = match cfg.design {
        DesignKind::Orthonormal => DesignKind::Rademacher,
        k => k,
    };
    let x_val = gen_design(val_kind, n_val, cfg.d, &mut rng(Purpose::ValidationDesign))?;
    let xi_val = gen_noise(cfg.sigma, n_val, &mut rng(Purpose::ValidationNoise))?;
    let y_val = add(&mat_apply(&x_val, &signal.w_star)?, &xi_val);
    Ok(Instance {
        x,
        y,
        xi,
        signal,
        x_val,
        y_val,
    })
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// The snapshot with the smallest validation loss; ties go to the smaller `t`.
pub fn validation_stop(traj: &Trajectory, x_val: &DenseMatrix, y_val: &[f64]) -> Result<(usize, Vec<f64>)> {
    if traj.snapshots.is_empty() {
        return Err(Error::param("validation stop needs at least one snapshot"));
    }
    if y_val.len() != x_val.rows() {
        return Err(Error::dim("validation response", x_val.rows(), y_val.len()));
    }
    let mut best: Option<(f64, usize)> = None;
    for (i, (_, w)) in traj.snapshots.iter().enumerate() {
        let loss = dist2_sq(&mat_apply(x_val, w)?, y_val);
        if best.is_none_or(|(b, _)| loss < b) {
            best = Some((loss, i));
        }
    }
    let (_, i) = best.expect("nonempty");
    let (t, w) = &traj.snapshots[i];
    Ok((*t, w.clone()))
}

/// `(l2_error_sq, linf_on_support, linf_off_support)` of `w` against `w*`.
pub fn metrics(w: &[f64], signal: &SparseSignal) -> (f64, f64, f64) {
    let mut on = 0.0_f64;
    let mut off = 0.0_f64;
    for (a, b) in w.iter().zip(&signal.w_star) {
        if *b != 0.0 {
            on = on.max((a - b).abs());
        } else {
            off = off.max(a.abs());
        }
    }
    (dist2_sq(w, &signal.w_star), on, off)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    axis_value: Option<f64>,
    trial: usize,
    seed: u64,
}

impl Ctx<'_> {
    fn record(&self, est: Estimator, w: &[f64], signal: &SparseSignal, selected: Option<f64>, iters: usize, stop: &str) -> TrialRecord {
        let (l2, on, off) = metrics(w, signal);
        TrialRecord {
            family: self.cfg.family,
            axis_value: self.axis_value,
            trial: self.trial,
            seed: self.seed,
            estimator: est,
            selected,
            l2_error_sq: l2,
            linf_on_support: on,
            linf_off_support: off,
            iterations_used: iters,
            stop_reason: stop.to_string(),
            failed: false,
        }
    }

    fn failed(&self, est: Estimator, iters: usize, stop: &str) -> TrialRecord {
        TrialRecord {
            family: self.cfg.family,
            axis_value: self.axis_value,
            trial: self.trial,
            seed: self.seed,
            estimator: est,
            selected: None,
            l2_error_sq: f64::NAN,
            linf_on_support: f64::NAN,
            linf_off_support: f64::NAN,
            iterations_used: iters,
            stop_reason: stop.to_string(),
            failed: true,
        }
    }

    fn trace(&self, est: Estimator, traj: &Trajectory, signal: &SparseSignal) -> Trace {
        Trace {
            family: self.cfg.family,
            axis_value: self.axis_value,
            trial: self.trial,
            estimator: est,
            support: signal.support.clone(),
            points: traj
                .snapshots
                .iter()
                .map(|(t, w)| {
                    let (l2, _, off) = metrics(w, signal);
                    TracePoint {
                        t: *t,
                        l2_error_sq: l2,
                        linf_off_support: off,
                        on_support: signal.support.iter().map(|&j| w[j]).collect(),
                    }
                })
                .collect(),
        }
    }
}

/// Descent run that keeps the partial trajectory when the iterates blow up.
/// `None` means the step size could not be set (no signal in `X^T y`).
fn descend(cfg: &ExperimentConfig, inst: &Instance, est: Estimator) -> Result<Option<Trajectory>> {
    let probe = estimate_wmax(&inst.x, &inst.y, DEFAULT_ETA_TILDE)?;
    let eta = match cfg.eta {
        EtaSetting::Fixed(e) => e,
        EtaSetting::Auto(_) => match probe.production_eta() {
            Some(e) => e,
            None => return Ok(None),
        },
    };
    if probe.degenerate && est == Estimator::GdAlg2 {
        return Ok(None);
    }
    let dc = DescentConfig {
        tau: cfg.tau,
        z_hat: (!probe.degenerate).then_some(probe.z_hat),
        snapshot_every: cfg.snapshot_every,
        safety_stop: cfg
            .safety_stop
            .then(|| SafetyStop::sqrt_alpha(cfg.alpha, inst.signal.signs())),
        ..DescentConfig::new(eta, cfg.alpha, cfg.iterations)
    };
    let run = if est == Estimator::GdAlg1 { run_alg1 } else { run_alg2 };
    match run(&inst.x, &inst.y, &dc) {
        Ok(t) => Ok(Some(t)),
        Err(Error::Divergence { partial, .. }) => Ok(Some(*partial)),
        Err(e) => Err(e),
    }
}

/// Run every estimator of the family on trial `trial` at sweep value
/// `axis_value`. Estimator failures become failed records; only invalid
/// settings are errors.
pub fn run_trial(cfg: &ExperimentConfig, axis_value: Option<f64>, trial: usize) -> Result<TrialOutcome> {
    let point = cfg.at(axis_value)?;
    let seed = trial_seed(cfg, trial);
    let inst = gen_instance(&point, seed)?;
    let ctx = Ctx {
        cfg: &point,
        axis_value,
        trial,
        seed,
    };
    let mut out = TrialOutcome::default();
    let estimators = point.estimators();

    if point.family == Family::AlgComparison {
        return alg_comparison(&ctx, &inst, &estimators);
    }

    for est in estimators {
        match est {
            Estimator::GdAlg1 | Estimator::GdAlg2 => {
                let Some(traj) = descend(&point, &inst, est)? else {
                    out.records.push(ctx.failed(est, 0, "degenerate-step"));
                    continue;
                };
                if point.record_traces {
                    out.traces.push(ctx.trace(est, &traj, &inst.signal));
                }
                if traj.snapshots.is_empty() {
                    out.records.push(ctx.failed(est, traj.final_state.t, traj.stop_reason.as_str()));
                    continue;
                }
                let (t, w) = validation_stop(&traj, &inst.x_val, &inst.y_val)?;
                out.records.push(ctx.record(
                    est,
                    &w,
                    &inst.signal,
                    Some(t as f64),
                    traj.final_state.t,
                    traj.stop_reason.as_str(),
                ));
            }
            Estimator::Lasso => {
                let top = lambda_max(&inst.x, &inst.y)?;
                if !(top > 0.0) {
                    out.records.push(ctx.record(est, &vec![0.0; point.d], &inst.signal, Some(0.0), 0, "zero-response"));
                    continue;
                }
                let grid = log_grid(top, point.lasso.lambda_min_ratio, point.lasso.path_count)?;
                let template = LassoConfig {
                    lambda: 0.0,
                    tol: point.lasso.tol,
                    max_sweeps: point.lasso.max_sweeps,
                };
                let path = lasso_path_with(&inst.x, &inst.y, &grid, &template)?;
                let sel = oracle_lambda_select(&path, &inst.signal)?;
                let stop = if path.converged[sel.index] { "converged" } else { "max-sweeps" };
                let sweeps = path.sweeps.iter().sum();
                out.records.push(ctx.record(est, &sel.solution, &inst.signal, Some(sel.lambda), sweeps, stop));
            }
            Estimator::OracleLs => match oracle_ls(&inst.x, &inst.y, &inst.signal.support) {
                Ok(w) => out.records.push(ctx.record(est, &w, &inst.signal, None, 0, "closed-form")),
                Err(Error::Singular) => out.records.push(ctx.failed(est, 0, "singular")),
                Err(e) => return Err(e),
            },
            Estimator::Null => {
                out.records.push(ctx.record(est, &vec![0.0; point.d], &inst.signal, None, 0, "closed-form"));
            }
        }
    }
    Ok(out)
}

/// Both algorithms run for the full budget; each record reports the first
/// snapshot whose l2 error is within `match_factor` times the larger of the
/// two best errors.
fn alg_comparison(ctx: &Ctx<'_>, inst: &Instance, estimators: &[Estimator]) -> Result<TrialOutcome> {
    let mut out = TrialOutcome::default();
    let mut runs = Vec::new();
    for &est in estimators {
        match est {
            Estimator::GdAlg1 | Estimator::GdAlg2 => {
                let traj = descend(ctx.cfg, inst, est)?;
                if let (Some(t), true) = (&traj, ctx.cfg.record_traces) {
                    out.traces.push(ctx.trace(est, t, &inst.signal));
                }
                runs.push((est, traj));
            }
            other => {
                return Err(Error::Config(format!(
                    "alg-comparison only runs descent estimators, got {}",
                    other.as_str()
                )))
            }
        }
    }
    let errors: Vec<Option<Vec<f64>>> = runs
        .iter()
        .map(|(_, tr)| {
            tr.as_ref()
                .filter(|t| !t.snapshots.is_empty())
                .map(|t| t.snapshots.iter().map(|(_, w)| dist2_sq(w, &inst.signal.w_star)).collect())
        })
        .collect();
    let level = ctx.cfg.match_factor
        * errors
            .iter()
            .flatten()
            .map(|e| e.iter().fold(f64::INFINITY, |m, &v| m.min(v)))
            .fold(0.0_f64, f64::max);
    for ((est, traj), errs) in runs.iter().zip(&errors) {
        let (Some(traj), Some(errs)) = (traj, errs) else {
            let iters = traj.as_ref().map_or(0, |t| t.final_state.t);
            let stop = traj.as_ref().map_or("degenerate-step", |t| t.stop_reason.as_str());
            out.records.push(ctx.failed(*est, iters, stop));
            continue;
        };
        let i = errs.iter().position(|&e| e <= level).expect("the best error is within the level");
        let (t, w) = &traj.snapshots[i];
        out.records.push(ctx.record(*est, w, &inst.signal, Some(*t as f64), *t, traj.stop_reason.as_str()));
    }
    Ok(out)
}
