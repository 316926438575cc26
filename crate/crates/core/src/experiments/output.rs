//! CSV emitters. Every file starts with a header row; reals are written with
//! 17 significant digits so they parse back to the same double.

use std::io::Write;

use crate::error::{Error, Result};

use super::sweep::SweepSummary;
use super::trial::{Trace, TrialRecord};

pub const TRIAL_HEADER: [&str; 10] = [
    "family",
    "axis_value",
    "trial",
    "estimator",
    "selected_t_or_lambda",
    "l2_error_sq",
    "linf_on_support",
    "linf_off_support",
    "iterations_used",
    "stop_reason",
];

pub const SUMMARY_HEADER: [&str; 7] = [
    "family",
    "axis_value",
    "estimator",
    "median_l2",
    "p25_l2",
    "p75_l2",
    "excluded_trials",
];

pub const TRACE_HEADER: [&str; 7] = ["family", "axis_value", "trial", "estimator", "t", "series", "value"];

/// Round-trippable decimal form.
pub fn fmt_real(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_real).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_trials_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIAL_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.family.as_str().to_string(),
            fmt_opt(r.axis_value),
            r.trial.to_string(),
            r.estimator.as_str().to_string(),
            fmt_opt(r.selected),
            fmt_real(r.l2_error_sq),
            fmt_real(r.linf_on_support),
            fmt_real(r.linf_off_support),
            r.iterations_used.to_string(),
            r.stop_reason.clone(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(summaries: &[SweepSummary], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for s in summaries {
        w.write_record([
            s.family.as_str().to_string(),
            fmt_opt(s.axis_value),
            s.estimator.clone(),
            fmt_real(s.median_l2),
            fmt_real(s.p25_l2),
            fmt_real(s.p75_l2),
            s.excluded_trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per snapshot and series, where the series are
/// `l2_error_sq`, `linf_off_support` and `w[j]` for each support index `j`.
pub fn write_traces_csv<W: Write>(traces: &[Trace], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for tr in traces {
        let head = [
            tr.family.as_str().to_string(),
            fmt_opt(tr.axis_value),
            tr.trial.to_string(),
            tr.estimator.as_str().to_string(),
        ];
        for p in &tr.points {
            let mut row = |series: String, value: f64| {
                let [a, b, c, d] = head.clone();
                w.write_record([a, b, c, d, p.t.to_string(), series, fmt_real(value)])
            };
            row("l2_error_sq".into(), p.l2_error_sq).map_err(csv_err)?;
            row("linf_off_support".into(), p.linf_off_support).map_err(csv_err)?;
            for (j, v) in tr.support.iter().zip(&p.on_support) {
                row(format!("w[{j}]"), *v).map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
