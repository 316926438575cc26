use crate::error::Result;
use crate::par::{map_indexed, Execution};

use super::config::{Estimator, ExperimentConfig, Family};
use super::trial::{run_trial, Trace, TrialRecord};

/// Percentiles of one estimator's squared l2 error at one sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub family: Family,
    pub axis_value: Option<f64>,
    /// Estimator name, or [`LOG2_RATIO`] for the paired error ratio.
    pub estimator: String,
    pub median_l2: f64,
    pub p25_l2: f64,
    pub p75_l2: f64,
    pub excluded_trials: usize,
}

/// Pseudo-estimator of sample-complexity sweeps: per-trial
/// `log2(gd error / lasso error)`, summarized like an error.
pub const LOG2_RATIO: &str = "log2-ratio-gd-lasso";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub summaries: Vec<SweepSummary>,
    pub traces: Vec<Trace>,
}

/// Linearly interpolated `q`-quantile of ascending `sorted`; NaN when empty.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let pos = q.clamp(0.0, 1.0) * (len - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// `(p25, median, p75)` of finite values.
fn quartiles(values: &mut [f64]) -> (f64, f64, f64) {
    values.sort_by(f64::total_cmp);
    (percentile(values, 0.25), percentile(values, 0.5), percentile(values, 0.75))
}

/// Every trial at every sweep value, trials seeded `base_seed + trial`.
/// Work items may run in parallel; results are folded in index order.
pub fn run_sweep(cfg: &ExperimentConfig, exec: Execution) -> Result<SweepResult> {
    cfg.validate()?;
    let points = cfg.points();
    let reps = cfg.repetitions;
    let outcomes = map_indexed(exec, points.len() * reps, |i| run_trial(cfg, points[i / reps], i % reps));
    let mut result = SweepResult::default();
    for o in outcomes {
        let o = o?;
        result.records.extend(o.records);
        result.traces.extend(o.traces);
    }
    result.summaries = summarize(cfg, &points, &result.records);
    Ok(result)
}

/// Per-point, per-estimator quartiles in estimator order, failed records
/// excluded and counted.
pub fn summarize(cfg: &ExperimentConfig, points: &[Option<f64>], records: &[TrialRecord]) -> Vec<SweepSummary> {
    let estimators = cfg.estimators();
    let mut out = Vec::new();
    for &p in points {
        let at: Vec<&TrialRecord> = records.iter().filter(|r| same_point(r.axis_value, p)).collect();
        for &est in &estimators {
            let mine: Vec<&&TrialRecord> = at.iter().filter(|r| r.estimator == est).collect();
            let mut ok: Vec<f64> = mine.iter().filter(|r| !r.failed).map(|r| r.l2_error_sq).collect();
            let excluded = mine.len() - ok.len();
            let (p25, med, p75) = quartiles(&mut ok);
            out.push(SweepSummary {
                family: cfg.family,
                axis_value: p,
                estimator: est.as_str().to_string(),
                median_l2: med,
                p25_l2: p25,
                p75_l2: p75,
                excluded_trials: excluded,
            });
        }
        if cfg.family == Family::SampleComplexity {
            out.push(log2_ratio(cfg, p, &at, &estimators));
        }
    }
    out
}

fn same_point(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x.to_bits() == y.to_bits(),
        (None, None) => true,
        _ => false,
    }
}

fn log2_ratio(cfg: &ExperimentConfig, p: Option<f64>, at: &[&TrialRecord], estimators: &[Estimator]) -> SweepSummary {
    let gd = estimators
        .iter()
        .copied()
        .find(|e| matches!(e, Estimator::GdAlg1 | Estimator::GdAlg2));
    let mut ratios = Vec::new();
    let mut excluded = 0;
    for trial in 0..cfg.repetitions {
        let pick = |e: Option<Estimator>| at.iter().find(|r| Some(r.estimator) == e && r.trial == trial);
        match (pick(gd), pick(Some(Estimator::Lasso))) {
            (Some(g), Some(l)) if !g.failed && !l.failed && g.l2_error_sq > 0.0 && l.l2_error_sq > 0.0 => {
                ratios.push((g.l2_error_sq / l.l2_error_sq).log2())
            }
            _ => excluded += 1,
        }
    }
    let (p25, med, p75) = quartiles(&mut ratios);
    SweepSummary {
        family: cfg.family,
        axis_value: p,
        estimator: LOG2_RATIO.to_string(),
        median_l2: med,
        p25_l2: p25,
        p75_l2: p75,
        excluded_trials: excluded,
    }
}
