//! Randomized invariants across the public API.

use proptest::prelude::*;

use implicit_sparse::baselines::{lambda_max, lasso_cd, lasso_path_with, log_grid, LassoConfig};
use implicit_sparse::descent::{gd_step, DescentState};
use implicit_sparse::design::{gen_design, gen_noise, gen_signal, DesignKind, SignalSpec};
use implicit_sparse::dynamics::{iterate_plain, ScalarSequenceSpec};
use implicit_sparse::experiments::{percentile, ExperimentConfig, Family, Preset};
use implicit_sparse::linalg::{mat_apply, mat_t_apply, DenseMatrix};
use implicit_sparse::par::{map_indexed, Execution};
use implicit_sparse::SeededRng;

fn instance(seed: u64, n: usize, d: usize, k: usize, sigma: f64) -> (DenseMatrix, Vec<f64>) {
    let x = gen_design(DesignKind::GaussianIsotropic, n, d, &mut SeededRng::new(seed, 1)).unwrap();
    let s = gen_signal(&SignalSpec::constant(1.0, d, k), &mut SeededRng::new(seed, 2)).unwrap();
    let xi = gen_noise(sigma, n, &mut SeededRng::new(seed, 3)).unwrap();
    let y = mat_apply(&x, &s.w_star).unwrap().iter().zip(&xi).map(|(a, b)| a + b).collect();
    (x, y)
}

/// Largest violation of the lasso optimality conditions
/// `|X_j^T r / n| <= lambda`, with equality and matching sign where `w_j != 0`.
fn kkt_violation(x: &DenseMatrix, y: &[f64], w: &[f64], lambda: f64) -> f64 {
    let fit = mat_apply(x, w).unwrap();
    let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let g = mat_t_apply(x, &r).unwrap();
    let n = x.rows() as f64;
    g.iter()
        .zip(w)
        .map(|(gj, wj)| {
            let c = gj / n;
            if *wj == 0.0 {
                (c.abs() - lambda).max(0.0)
            } else {
                (c - lambda * wj.signum()).abs()
            }
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn uv_product_never_grows(seed in 0u64..1000, eta in 0.001f64..0.05, steps in 1usize..30) {
        let (x, y) = instance(seed, 30, 60, 3, 0.5);
        let mut s = DescentState::new(60, 1e-3, eta);
        for _ in 0..steps {
            let next = gd_step(&s, &x, &y).unwrap();
            for j in 0..60 {
                prop_assert!(next.u[j] * next.v[j] <= s.u[j] * s.v[j]);
            }
            s = next;
        }
    }

    #[test]
    fn lasso_solutions_satisfy_optimality(seed in 0u64..1000, frac in 0.001f64..1.0, d in 20usize..120) {
        let (x, y) = instance(seed, 40, d, 4, 0.3);
        let lambda = frac * lambda_max(&x, &y).unwrap();
        let fit = lasso_cd(&x, &y, &LassoConfig::new(lambda), None).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.max_objective_increase <= 1e-12 * fit.objective.max(1.0));
        let v = kkt_violation(&x, &y, &fit.w, lambda);
        prop_assert!(v <= 1e-6 * lambda.max(1e-3), "kkt violation {v} at lambda {lambda}");
    }

    #[test]
    fn lasso_path_entries_are_optimal(seed in 0u64..1000) {
        let (x, y) = instance(seed, 30, 90, 4, 0.5);
        let grid = log_grid(lambda_max(&x, &y).unwrap(), 1e-3, 25).unwrap();
        let path = lasso_path_with(&x, &y, &grid, &LassoConfig::new(0.0)).unwrap();
        prop_assert!(path.converged.iter().all(|c| *c));
        for (w, &lambda) in path.solutions.iter().zip(&grid) {
            prop_assert!(w.iter().filter(|v| **v != 0.0).count() <= x.rows());
            let v = kkt_violation(&x, &y, w, lambda);
            prop_assert!(v <= 1e-6 * lambda.max(1e-3), "kkt violation {v} at lambda {lambda}");
        }
    }

    #[test]
    fn plain_recursion_approaches_target_monotonically(
        x_star in 1e-3f64..1e3,
        start in 1e-6f64..1.0,
        factor in 0.1f64..1.0,
    ) {
        let eta = factor / (16.0 * x_star);
        let x0 = start * x_star;
        let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, x_star, eta, 300));
        prop_assert!(seq.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(seq.iter().all(|&v| v <= x_star));
    }

    #[test]
    fn percentiles_are_ordered(mut v in prop::collection::vec(-1e6f64..1e6, 1..50)) {
        v.sort_by(f64::total_cmp);
        let (p25, p50, p75) = (percentile(&v, 0.25), percentile(&v, 0.5), percentile(&v, 0.75));
        prop_assert!(v[0] <= p25 && p25 <= p50 && p50 <= p75 && p75 <= v[v.len() - 1]);
    }

    #[test]
    fn config_overrides_round_trip(n in 10usize..500, k in 1usize..10, gamma in 0.01f64..10.0, seed in 0u64..u64::MAX) {
        let text = format!(r#"{{"n": {n}, "d": {}, "k": {k}, "gamma": {gamma}, "base_seed": {seed}, "sweep": null}}"#, 4 * n);
        let cfg = ExperimentConfig::from_json_str(&text, Preset::Desk, Some(Family::DimensionBias)).unwrap();
        prop_assert_eq!((cfg.n, cfg.d, cfg.k, cfg.gamma, cfg.base_seed), (n, 4 * n, k, gamma, seed));
        let again = ExperimentConfig::from_json_str(&cfg.to_json_string(), Preset::Paper, None).unwrap();
        prop_assert_eq!(again, cfg);
    }

    #[test]
    fn execution_modes_agree(n in 0usize..200) {
        let f = |i: usize| SeededRng::new(i as u64, 9).normal();
        let a = map_indexed(Execution::Sequential, n, f);
        let b = map_indexed(Execution::Parallel, n, f);
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
