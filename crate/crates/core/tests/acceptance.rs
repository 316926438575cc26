//! Acceptance suite. Each test checks one criterion, prints a single
//! `PASS` or `FAIL` line with the measured quantities, and then asserts.
//!
//! Heavy criteria take a shared lock so that their wall-clock budgets are
//! measured without competing tests on the same cores.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use implicit_sparse::baselines::{lasso_cd, soft_threshold_closed_form, LassoConfig};
use implicit_sparse::descent::{
    estimate_wmax, run_alg1, run_alg2, simplified_budget, DescentConfig, StopReason, TargetNorm, TargetStop,
    DEFAULT_ETA_TILDE,
};
use implicit_sparse::design::{gen_design, gen_noise, gen_signal, max_noise_stat, DesignKind, SignalSpec, SparseSignal};
use implicit_sparse::dynamics::{run_suite, SuiteConfig};
use implicit_sparse::experiments::{
    percentile, run_sweep, Estimator, ExperimentConfig, Family, Preset, SweepResult, TrialRecord,
};
use implicit_sparse::linalg::{mat_apply, mat_t_apply, DenseMatrix};
use implicit_sparse::par::Execution;
use implicit_sparse::SeededRng;

static HEAVY: Mutex<()> = Mutex::new(());

fn serialized() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(name: &str, ok: bool, elapsed: Duration, detail: String) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!("{tag} {name} ({:.1}s): {detail}", elapsed.as_secs_f64());
}

fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        f64::NAN
    } else {
        percentile(&v, 0.5)
    }
}

fn records<'a>(res: &'a SweepResult, est: Estimator, axis: Option<f64>) -> Vec<&'a TrialRecord> {
    res.records
        .iter()
        .filter(|r| r.estimator == est && r.axis_value == axis)
        .collect()
}

fn median_l2(res: &SweepResult, est: Estimator, axis: Option<f64>) -> f64 {
    let errs: Vec<f64> = records(res, est, axis)
        .iter()
        .filter(|r| !r.failed)
        .map(|r| r.l2_error_sq)
        .collect();
    median(&errs)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p + q).collect()
}

/// Nonnegative signal on `k` of `d` coordinates with magnitudes uniform on
/// `[w_min, w_max]`; the first two support entries are pinned to the ends.
fn bracketed_signal(rng: &mut SeededRng, d: usize, k: usize, w_min: f64, w_max: f64) -> SparseSignal {
    let mut w = vec![0.0; d];
    for (i, j) in rng.sample_indices(d, k).into_iter().enumerate() {
        w[j] = match i {
            0 => w_min,
            1 => w_max,
            _ => rng.uniform_in(w_min, w_max),
        };
    }
    SparseSignal::from_vector(w).unwrap()
}

fn off_support_sup(w: &[f64], signal: &SparseSignal) -> f64 {
    w.iter()
        .zip(&signal.w_star)
        .filter(|(_, s)| **s == 0.0)
        .fold(0.0_f64, |m, (v, _)| m.max(v.abs()))
}

fn on_support_sup(w: &[f64], signal: &SparseSignal) -> f64 {
    w.iter()
        .zip(&signal.w_star)
        .filter(|(_, s)| **s != 0.0)
        .fold(0.0_f64, |m, (v, s)| m.max((v - s).abs()))
}

struct SimplifiedRun {
    reached: bool,
    t: usize,
    budget: usize,
    off_support: f64,
}

/// Noiseless run on `X = sqrt(n) I` with `w_min = 0.1`, `w_max = 1`,
/// `alpha = 1e-4` and `eta = 1 / (10 w_max)`, stopped once
/// `||w_t - w*||_inf <= alpha^2`.
fn simplified_run(seed: u64) -> SimplifiedRun {
    let (n, alpha, w_min, w_max) = (50, 1e-4, 0.1, 1.0);
    let eta = 1.0 / (10.0 * w_max);
    let mut rng = SeededRng::new(seed, 11);
    let signal = bracketed_signal(&mut rng, n, 10, w_min, w_max);
    let x = DenseMatrix::scaled_identity(n, (n as f64).sqrt()).unwrap();
    let y = mat_apply(&x, &signal.w_star).unwrap();
    let budget = simplified_budget(w_max, w_min, alpha, eta);
    let cfg = DescentConfig {
        target: Some(TargetStop {
            w_star: signal.w_star.clone(),
            norm: TargetNorm::Linf,
            tol: alpha * alpha,
        }),
        ..DescentConfig::new(eta, alpha, budget)
    };
    let traj = run_alg1(&x, &y, &cfg).unwrap();
    let w = traj.final_state.w();
    SimplifiedRun {
        reached: traj.stop_reason == StopReason::TargetReached,
        t: traj.final_state.t,
        budget,
        off_support: off_support_sup(&w, &signal),
    }
}

#[test]
fn simplified_theorem_recovery() {
    let start = Instant::now();
    let runs: Vec<SimplifiedRun> = (0..20).map(simplified_run).collect();
    let elapsed = start.elapsed();
    let reached = runs.iter().filter(|r| r.reached && r.t <= r.budget).count();
    let worst = runs.iter().map(|r| r.t).max().unwrap();
    let ok = reached == runs.len() && elapsed < Duration::from_secs(1);
    verdict(
        "simplified-theorem",
        ok,
        elapsed,
        format!(
            "{reached}/{} runs reach alpha^2 within budget {}; slowest t = {worst}",
            runs.len(),
            runs[0].budget
        ),
    );
    assert!(ok);
}

#[test]
fn wmax_estimator_bracket() {
    let _guard = serialized();
    let start = Instant::now();
    let (n, d, k) = (400, 1000, 5);
    let mut inside = 0;
    let mut worst_ratio = (f64::INFINITY, 0.0_f64);
    for seed in 0..100u64 {
        let x = gen_design(DesignKind::Rademacher, n, d, &mut SeededRng::new(seed, 21)).unwrap();
        let signal = gen_signal(&SignalSpec::constant(1.0, d, k), &mut SeededRng::new(seed, 22)).unwrap();
        let y = mat_apply(&x, &signal.w_star).unwrap();
        let z = estimate_wmax(&x, &y, DEFAULT_ETA_TILDE).unwrap().z_hat;
        let w_max = signal.w_star.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let ratio = z / w_max;
        worst_ratio = (worst_ratio.0.min(ratio), worst_ratio.1.max(ratio));
        if (1.0..2.0).contains(&ratio) {
            inside += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = inside == 100 && elapsed < Duration::from_secs(30);
    verdict(
        "wmax-bracket",
        ok,
        elapsed,
        format!(
            "{inside}/100 estimates in [w_max, 2 w_max); z_hat / w_max in [{:.4}, {:.4}]",
            worst_ratio.0, worst_ratio.1
        ),
    );
    assert!(ok);
}

#[test]
fn lemma_suite() {
    let _guard = serialized();
    let start = Instant::now();
    let outcomes = run_suite(&SuiteConfig {
        cases: 200,
        ..SuiteConfig::default()
    });
    let elapsed = start.elapsed();
    let failed: Vec<String> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| format!("{} ({} failures, first: {:?})", o.name, o.failures, o.first_failure))
        .collect();
    let ok = failed.is_empty() && outcomes.iter().all(|o| o.cases == 200) && elapsed < Duration::from_secs(120);
    verdict(
        "lemma-suite",
        ok,
        elapsed,
        if failed.is_empty() {
            format!("{} properties x 200 cases, no violations", outcomes.len())
        } else {
            failed.join("; ")
        },
    );
    assert!(ok);
}

/// `sqrt(n) Q` for a random orthogonal `Q`, so that `X^T X / n = I`.
fn rotated_orthonormal(n: usize, rng: &mut SeededRng) -> DenseMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.normal());
    let q = g.qr().q() * (n as f64).sqrt();
    DenseMatrix::from_rows(&(0..n).map(|i| q.row(i).iter().copied().collect()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn lasso_closed_form_equivalence() {
    let start = Instant::now();
    let n = 40;
    let mut worst = 0.0_f64;
    for seed in 0..100u64 {
        let mut rng = SeededRng::new(seed, 31);
        let x = if seed % 2 == 0 {
            DenseMatrix::scaled_identity(n, (n as f64).sqrt()).unwrap()
        } else {
            rotated_orthonormal(n, &mut rng)
        };
        let signal = gen_signal(&SignalSpec::constant(1.0, n, 5), &mut rng).unwrap();
        let xi = gen_noise(0.5, n, &mut rng).unwrap();
        let y = add(&mat_apply(&x, &signal.w_star).unwrap(), &xi);
        let w_ls: Vec<f64> = mat_t_apply(&x, &y).unwrap().iter().map(|v| v / n as f64).collect();
        let lambda = rng.uniform_in(0.0, 1.2);
        let closed = soft_threshold_closed_form(&w_ls, lambda).unwrap();
        let fit = lasso_cd(&x, &y, &LassoConfig::new(lambda), None).unwrap();
        assert!(fit.converged);
        let gap = fit.w.iter().zip(&closed).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        worst = worst.max(gap);
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-8 && elapsed < Duration::from_secs(10);
    verdict(
        "lasso-closed-form",
        ok,
        elapsed,
        format!("100 orthonormal instances, max |cd - soft threshold| = {worst:.3e}"),
    );
    assert!(ok);
}

#[test]
fn alg1_vs_alg2_iteration_ratio() {
    let _guard = serialized();
    let start = Instant::now();
    let mut cfg = ExperimentConfig::preset(Preset::Desk, Family::AlgComparison);
    cfg.record_traces = false;
    assert_eq!((cfg.n, cfg.d, cfg.k, cfg.repetitions, cfg.tau), (250, 1000, 7, 10, 10));
    let res = run_sweep(&cfg, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    let iters = |est| -> (Vec<f64>, usize) {
        let rs = records(&res, est, None);
        let failed = rs.iter().filter(|r| r.failed).count();
        (rs.iter().filter(|r| !r.failed).map(|r| r.iterations_used as f64).collect(), failed)
    };
    let (t1, f1) = iters(Estimator::GdAlg1);
    let (t2, f2) = iters(Estimator::GdAlg2);
    let ratio = median(&t1) / median(&t2);
    let ok = f1 == 0 && f2 == 0 && ratio >= 8.0 && elapsed < Duration::from_secs(300);
    verdict(
        "alg1-vs-alg2-ratio",
        ok,
        elapsed,
        format!(
            "median iterations to matched error: alg1 {} / alg2 {} = {ratio:.2} (need >= 8); failed runs {f1}/{f2}",
            median(&t1),
            median(&t2)
        ),
    );
    assert!(ok);
}

#[test]
fn phase_transition() {
    let _guard = serialized();
    let start = Instant::now();
    let cfg = ExperimentConfig::preset(Preset::Desk, Family::PhaseTransitionGamma);
    assert_eq!((cfg.n, cfg.d, cfg.k, cfg.sigma, cfg.repetitions), (250, 2000, 10, 1.0, 15));
    let thr = cfg.threshold();
    let res = run_sweep(&cfg, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    let mut ok = elapsed < Duration::from_secs(15 * 60);
    let mut lines = Vec::new();
    let (mut above, mut below) = (0, 0);
    for axis in cfg.points() {
        let gamma = axis.unwrap();
        let gd = median_l2(&res, Estimator::GdAlg2, axis);
        let (reference, name) = if gamma >= 2.0 * thr {
            above += 1;
            (median_l2(&res, Estimator::OracleLs, axis), "oracle-ls")
        } else if gamma <= 0.5 * thr {
            below += 1;
            (median_l2(&res, Estimator::Lasso, axis), "lasso")
        } else {
            continue;
        };
        let pass = gd <= 2.0 * reference;
        ok &= pass;
        lines.push(format!("gamma {gamma}: gd {gd:.4e} vs 2 x {name} {:.4e}", 2.0 * reference));
    }
    ok &= above > 0 && below > 0;
    verdict(
        "phase-transition",
        ok,
        elapsed,
        format!("threshold {thr:.4}; {}", lines.join("; ")),
    );
    assert!(ok);
}

#[test]
fn dimension_free_bias() {
    let _guard = serialized();
    let start = Instant::now();
    let cfg = ExperimentConfig::preset(Preset::Desk, Family::DimensionBias);
    assert_eq!((cfg.n, cfg.k, cfg.gamma, cfg.sigma), (250, 5, 1.0, 0.5));
    let res = run_sweep(&cfg, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    let points = cfg.points();
    let gd: Vec<f64> = points.iter().map(|&a| median_l2(&res, Estimator::GdAlg2, a)).collect();
    let lasso: Vec<f64> = points.iter().map(|&a| median_l2(&res, Estimator::Lasso, a)).collect();
    let (lo, hi) = gd.iter().fold((f64::INFINITY, 0.0_f64), |(l, h), &v| (l.min(v), h.max(v)));
    let spread = hi / lo - 1.0;
    let increasing = lasso.windows(2).all(|p| p[1] > p[0]);
    // The smallest dimension must still sit above the threshold.
    let w_min_ok = points
        .iter()
        .all(|a| cfg.at(*a).map(|c| c.gamma >= c.threshold()).unwrap_or(false));
    let ok = spread < 0.25 && increasing && w_min_ok && elapsed < Duration::from_secs(15 * 60);
    verdict(
        "dimension-free-bias",
        ok,
        elapsed,
        format!(
            "d {:?}: gd medians {:?} (spread {:.1}%), lasso medians {:?}",
            points.iter().map(|a| a.unwrap()).collect::<Vec<_>>(),
            gd.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>(),
            100.0 * spread,
            lasso.iter().map(|v| format!("{v:.4e}")).collect::<Vec<_>>()
        ),
    );
    assert!(ok);
}

/// Off-support size on runs whose preconditions are certified: the design
/// is an exact isometry (`X^T X / n = I`, so every RIP constant is zero),
/// `eta = 1/(20 z_hat)` with `z_hat` from the one-step estimator, and
/// `w_min` is at least twice the phase-transition threshold. The stopping
/// time is the first snapshot at which the support error is within the
/// on-support bound `2 max_noise`.
fn certified_noisy_run(seed: u64, alg2: bool) -> (f64, f64) {
    let (n, k, gamma, sigma, alpha) = (400, 5, 1.0, 1.0, 1e-12);
    let x = DenseMatrix::scaled_identity(n, (n as f64).sqrt()).unwrap();
    let mut rng = SeededRng::new(seed, 41);
    let signal = gen_signal(&SignalSpec::constant(gamma, n, k), &mut rng).unwrap();
    let xi = gen_noise(sigma, n, &mut rng).unwrap();
    let y = add(&mat_apply(&x, &signal.w_star).unwrap(), &xi);
    assert!(gamma >= 2.0 * implicit_sparse::design::phase_transition_threshold(sigma, n, n));
    let maxnoise = max_noise_stat(&x, &xi).unwrap();
    let probe = estimate_wmax(&x, &y, DEFAULT_ETA_TILDE).unwrap();
    let cfg = DescentConfig {
        z_hat: Some(probe.z_hat),
        snapshot_every: 1,
        ..DescentConfig::new(probe.production_eta().unwrap(), alpha, 1500)
    };
    let traj = if alg2 { run_alg2(&x, &y, &cfg) } else { run_alg1(&x, &y, &cfg) }.unwrap();
    let (_, w) = traj
        .snapshots
        .iter()
        .find(|(_, w)| on_support_sup(w, &signal) <= 2.0 * maxnoise)
        .expect("support is fitted within the horizon");
    (off_support_sup(w, &signal), alpha.sqrt())
}

#[test]
fn off_support_control() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let mut violations = 0;
    for seed in 0..20u64 {
        let r = simplified_run(seed);
        runs += 1;
        worst = worst.max(r.off_support / 1e-4f64.sqrt());
        violations += usize::from(r.off_support > 1e-4f64.sqrt());
        for alg2 in [false, true] {
            let (off, cap) = certified_noisy_run(seed, alg2);
            runs += 1;
            worst = worst.max(off / cap);
            violations += usize::from(off > cap);
        }
    }
    let elapsed = start.elapsed();
    let ok = violations == 0;
    verdict(
        "off-support-sqrt-alpha",
        ok,
        elapsed,
        format!("{runs} certified runs, {violations} above sqrt(alpha); largest off-support / sqrt(alpha) = {worst:.3e}"),
    );
    assert!(ok);
}

#[test]
fn max_noise_bound() {
    let _guard = serialized();
    let start = Instant::now();
    let (n, d) = (200, 500);
    let bound = 4.0 * (2.0 * (2.0 * d as f64).ln()).sqrt() / (n as f64).sqrt();
    let mut within = 0;
    let mut largest = 0.0_f64;
    for seed in 0..1000u64 {
        let x = gen_design(DesignKind::Rademacher, n, d, &mut SeededRng::new(seed, 51)).unwrap();
        let xi = gen_noise(1.0, n, &mut SeededRng::new(seed, 52)).unwrap();
        let stat = max_noise_stat(&x, &xi).unwrap();
        largest = largest.max(stat);
        within += usize::from(stat <= bound);
    }
    let elapsed = start.elapsed();
    let ok = within >= 990 && elapsed < Duration::from_secs(60);
    verdict(
        "max-noise-bound",
        ok,
        elapsed,
        format!("{within}/1000 draws within {bound:.4}; largest statistic {largest:.4}"),
    );
    assert!(ok);
}
