use super::*;
use crate::descent::{run_alg1, DescentConfig, DescentState, StopReason, Trajectory};
use crate::design::DesignKind;
use crate::linalg::DenseMatrix;
use crate::par::Execution;

fn tiny(family: Family) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(Preset::Desk, family);
    c.n = 60;
    c.d = 120;
    c.k = 3;
    c.repetitions = 3;
    c.iterations = 300;
    c.alpha = 1e-6;
    c.lasso.path_count = 30;
    c.lasso.lambda_min_ratio = 1e-3;
    if let Some(s) = &mut c.sweep {
        if s.axis == Axis::D {
            s.values = vec![80.0, 120.0];
        } else if s.axis == Axis::N {
            s.values = vec![40.0, 60.0];
        } else {
            s.values.truncate(2);
        }
    }
    c
}

fn traj(snaps: Vec<(usize, Vec<f64>)>) -> Trajectory {
    let d = snaps.first().map_or(1, |s| s.1.len());
    Trajectory {
        snapshots: snaps,
        final_state: DescentState::new(d, 1e-3, 0.1),
        stop_reason: StopReason::MaxIters,
    }
}

#[test]
fn full_scale_defaults_from_empty_config() {
    let c = ExperimentConfig::from_json_str("", Preset::Paper, Some(Family::PhaseTransitionGamma)).unwrap();
    assert_eq!((c.n, c.d, c.k, c.tau, c.repetitions), (500, 10_000, 25, 10, 30));
    assert_eq!((c.alpha, c.gamma, c.sigma), (1e-12, 1.0, 1.0));
    assert_eq!(c.eta, EtaSetting::AUTO);
    let same = ExperimentConfig::from_json_str("  {}  ", Preset::Paper, Some(Family::PhaseTransitionGamma)).unwrap();
    assert_eq!(c, same);
    let desk = ExperimentConfig::from_json_str("{}", Preset::Desk, Some(Family::PhaseTransitionGamma)).unwrap();
    assert_eq!((desk.n, desk.d, desk.k, desk.repetitions), (250, 2000, 10, 15));
}

#[test]
fn config_errors() {
    let e = ExperimentConfig::from_json_str(r#"{"k": 20000}"#, Preset::Paper, None).unwrap_err();
    assert!(e.to_string().contains("k must satisfy"), "{e}");
    let e = ExperimentConfig::from_json_str(r#"{"colour": 3}"#, Preset::Paper, None).unwrap_err();
    assert!(e.to_string().contains("colour"), "{e}");
    let e = ExperimentConfig::from_json_str("{\n  \"n\": ,\n}", Preset::Paper, None).unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
    assert!(ExperimentConfig::from_json_str("[1]", Preset::Paper, None).is_err());
    assert!(ExperimentConfig::from_json_str(r#"{"eta": -1}"#, Preset::Paper, None).is_err());
    assert!(ExperimentConfig::from_json_str(r#"{"sweep": {"axis": "n", "values": [10.5]}}"#, Preset::Paper, None).is_err());
    assert!(ExperimentConfig::from_json_str(r#"{"sweep": {"axis": "mu", "values": [0.2]}}"#, Preset::Paper, None).is_err());
}

#[test]
fn config_overrides_and_round_trip() {
    let text = r#"{"family": "rip-violation", "eta": 0.01, "design": {"kind": "rademacher"}, "lasso": {"tol": 1e-8}, "sweep": {"values": [1.0]}}"#;
    let c = ExperimentConfig::from_json_str(text, Preset::Desk, None).unwrap();
    assert_eq!(c.family, Family::RipViolation);
    assert_eq!(c.eta, EtaSetting::Fixed(0.01));
    assert_eq!(c.design, DesignKind::Rademacher);
    assert_eq!(c.lasso.tol, 1e-8);
    assert_eq!(c.lasso.path_count, 200);
    assert_eq!(c.sweep.as_ref().unwrap().axis, Axis::Gamma);
    let again = ExperimentConfig::from_json_str(&c.to_json_string(), Preset::Paper, None).unwrap();
    assert_eq!(c, again);
    let auto = ExperimentConfig::from_json_str(r#"{"eta": "auto"}"#, Preset::Desk, None).unwrap();
    assert_eq!(auto.eta, EtaSetting::AUTO);
}

#[test]
fn every_preset_validates() {
    for fam in [
        Family::InitSize,
        Family::AlgComparison,
        Family::PhaseTransitionGamma,
        Family::PhaseTransitionSigma,
        Family::PhaseTransitionN,
        Family::DimensionBias,
        Family::SampleComplexity,
        Family::RipViolation,
    ] {
        for p in [Preset::Desk, Preset::Paper] {
            ExperimentConfig::preset(p, fam).validate().unwrap();
        }
    }
}

#[test]
fn validation_stop_rules() {
    let x = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let y = [1.0, 2.0];
    let one = traj(vec![(10, vec![5.0, 5.0])]);
    assert_eq!(validation_stop(&one, &x, &y).unwrap(), (10, vec![5.0, 5.0]));
    let several = traj(vec![(10, vec![0.0, 0.0]), (20, vec![1.0, 2.0]), (30, vec![1.0, 2.0]), (40, vec![3.0, 3.0])]);
    assert_eq!(validation_stop(&several, &x, &y).unwrap().0, 20);
    assert!(validation_stop(&traj(vec![]), &x, &y).is_err());
    assert!(validation_stop(&one, &x, &[1.0]).is_err());
}

#[test]
fn two_thousand_iterations_give_two_hundred_candidates() {
    let cfg = tiny(Family::PhaseTransitionGamma).at(Some(1.0)).unwrap();
    let inst = gen_instance(&cfg, 1).unwrap();
    let t = run_alg1(&inst.x, &inst.y, &DescentConfig::new(0.01, 1e-6, 2000)).unwrap();
    assert_eq!(t.snapshots.len(), 200);
    assert_eq!(inst.x_val.rows(), 15);
}

#[test]
fn percentiles() {
    assert_eq!(percentile(&[3.0], 0.25), 3.0);
    assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), 3.0);
    assert_eq!(percentile(&[0.0, 10.0], 0.25), 2.5);
    assert!(percentile(&[], 0.5).is_nan());
}

#[test]
fn single_repetition_collapses_quartiles() {
    let mut c = tiny(Family::PhaseTransitionGamma);
    c.repetitions = 1;
    let res = run_sweep(&c, Execution::Sequential).unwrap();
    for s in &res.summaries {
        assert_eq!((s.p25_l2, s.median_l2), (s.median_l2, s.p75_l2));
    }
}

#[test]
fn sweep_quartiles_are_ordered_and_deterministic() {
    let c = tiny(Family::PhaseTransitionSigma);
    let a = run_sweep(&c, Execution::Sequential).unwrap();
    let b = run_sweep(&c, Execution::Parallel).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.summaries.len(), 2 * 4);
    for s in &a.summaries {
        assert!(s.p25_l2 <= s.median_l2 && s.median_l2 <= s.p75_l2, "{s:?}");
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    write_summary_csv(&a.summaries, &mut x).unwrap();
    write_summary_csv(&b.summaries, &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn records_are_finite_and_seeded() {
    let c = tiny(Family::PhaseTransitionGamma);
    let out = run_trial(&c, Some(1.0), 2).unwrap();
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert_eq!(r.seed, 2);
        assert!(!r.failed);
        assert!(r.l2_error_sq >= 0.0 && r.l2_error_sq.is_finite());
        assert!(r.linf_on_support >= 0.0 && r.linf_off_support >= 0.0);
    }
    let null = out.records.iter().find(|r| r.estimator == Estimator::Null).unwrap();
    assert_eq!(null.l2_error_sq, 3.0);
}

#[test]
fn noiseless_lasso_at_grid_floor_recovers() {
    let mut c = tiny(Family::PhaseTransitionGamma);
    c.sigma = 0.0;
    c.sweep = None;
    c.estimators = Some(vec![Estimator::Lasso]);
    c.lasso.path_count = 50;
    c.lasso.lambda_min_ratio = 1e-4;
    let out = run_trial(&c, None, 0).unwrap();
    assert!(out.records[0].l2_error_sq <= 1e-6, "{:?}", out.records[0]);
}

#[test]
fn oracle_ls_is_paired_across_dimensions() {
    let mut c = tiny(Family::DimensionBias);
    c.estimators = Some(vec![Estimator::OracleLs]);
    let small = run_trial(&c, Some(80.0), 1).unwrap();
    let large = run_trial(&c, Some(120.0), 1).unwrap();
    assert_eq!(small.records[0].l2_error_sq, large.records[0].l2_error_sq);
    assert!(small.records[0].l2_error_sq > 0.0);
}

#[test]
fn alg_comparison_reports_matched_times() {
    let mut c = tiny(Family::AlgComparison);
    c.k = 3;
    c.eta = EtaSetting::Fixed(1.0 / 80.0);
    c.iterations = 3000;
    let out = run_trial(&c, None, 0).unwrap();
    assert_eq!(out.records.len(), 2);
    assert_eq!(out.traces.len(), 2);
    for r in &out.records {
        assert!(!r.failed);
        assert_eq!(r.selected, Some(r.iterations_used as f64));
    }
    let mut bad = c.clone();
    bad.estimators = Some(vec![Estimator::Lasso]);
    assert!(run_trial(&bad, None, 0).is_err());
}

#[test]
fn sample_complexity_adds_ratio_rows() {
    let c = tiny(Family::SampleComplexity);
    let res = run_sweep(&c, Execution::Sequential).unwrap();
    let ratios: Vec<_> = res.summaries.iter().filter(|s| s.estimator == LOG2_RATIO).collect();
    assert_eq!(ratios.len(), 2);
    assert!(ratios.iter().all(|s| s.median_l2.is_finite()));
}

#[test]
fn csv_layout() {
    let c = tiny(Family::PhaseTransitionGamma);
    let out = run_trial(&c, Some(0.5), 0).unwrap();
    let mut buf = Vec::new();
    write_trials_csv(&out.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRIAL_HEADER.join(","));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "phase-transition-gamma");
    assert_eq!(first[1].parse::<f64>().unwrap(), 0.5);
    assert_eq!(first[5].parse::<f64>().unwrap(), out.records[0].l2_error_sq);
    assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
    assert_eq!(fmt_real(1.0 / 3.0).len(), "3.3333333333333331e-1".len());
    let mut empty = Vec::new();
    write_traces_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap().trim(), TRACE_HEADER.join(","));
}
