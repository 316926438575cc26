//! Seeded simulation families: instance generation, per-trial estimator
//! runs with validation stopping, sweeps with quartile summaries, and CSV
//! output.

mod config;
mod output;
mod sweep;
mod trial;

pub use config::{AutoTag, Axis, Estimator, EtaSetting, ExperimentConfig, Family, LassoSettings, Preset, Sweep};
pub use output::{fmt_real, write_summary_csv, write_traces_csv, write_trials_csv, SUMMARY_HEADER, TRACE_HEADER, TRIAL_HEADER};
pub use sweep::{percentile, run_sweep, summarize, SweepResult, SweepSummary, LOG2_RATIO};
pub use trial::{gen_instance, metrics, run_trial, trial_seed, validation_stop, Instance, Trace, TracePoint, TrialOutcome, TrialRecord};

#[cfg(test)]
mod tests;
