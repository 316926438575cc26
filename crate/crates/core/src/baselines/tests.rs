use nalgebra::DMatrix;

use super::*;
use crate::design::{gen_design, gen_signal, DesignKind, SignalSpec};
use crate::linalg::mat_apply;
use crate::rng::SeededRng;

/// `sqrt(n) Q` with `Q` having orthonormal columns, so `X^T X / n = I`.
fn orthonormal(n: usize, d: usize, rng: &mut SeededRng) -> DenseMatrix {
    let g = DMatrix::from_fn(n, d, |_, _| rng.normal());
    let q = g.qr().q();
    let s = (n as f64).sqrt();
    DenseMatrix::from_rows(&(0..n).map(|i| (0..d).map(|j| s * q[(i, j)]).collect()).collect::<Vec<_>>()).unwrap()
}

fn gaussian_problem(n: usize, d: usize, seed: u64) -> (DenseMatrix, Vec<f64>) {
    let mut rng = SeededRng::new(seed, 0);
    let x = gen_design(DesignKind::GaussianIsotropic, n, d, &mut rng).unwrap();
    let y = (0..n).map(|_| rng.normal()).collect();
    (x, y)
}

#[test]
fn soft_threshold_examples() {
    assert_eq!(soft_threshold_closed_form(&[1.0, 0.2], 0.5).unwrap(), vec![0.5, 0.0]);
    assert_eq!(soft_threshold_closed_form(&[1.0, -3.0], 0.0).unwrap(), vec![1.0, -3.0]);
    let v = soft_threshold_closed_form(&[-1.0], 0.4).unwrap();
    assert!((v[0] + 0.6).abs() < 1e-15);
    assert!(soft_threshold_closed_form(&[1.0], -0.1).is_err());
}

#[test]
fn zero_lambda_is_least_squares() {
    let (x, y) = gaussian_problem(40, 8, 1);
    let fit = lasso_cd(&x, &y, &LassoConfig::new(0.0), None).unwrap();
    assert!(fit.converged);
    let all: Vec<usize> = (0..8).collect();
    let ls = oracle_ls(&x, &y, &all).unwrap();
    for (a, b) in fit.w.iter().zip(&ls) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn lambda_above_max_gives_zero() {
    let (x, y) = gaussian_problem(30, 50, 2);
    let lm = lambda_max(&x, &y).unwrap();
    for lambda in [lm, 2.0 * lm] {
        let fit = lasso_cd(&x, &y, &LassoConfig::new(lambda), None).unwrap();
        assert!(fit.w.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn orthonormal_matches_closed_form() {
    let mut rng = SeededRng::new(3, 0);
    for _ in 0..20 {
        let (n, d) = (30, 12);
        let x = orthonormal(n, d, &mut rng);
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let ls: Vec<f64> = mat_t_apply(&x, &y).unwrap().iter().map(|v| v / n as f64).collect();
        let lambda = rng.uniform_in(0.0, 1.2 * inf_norm(&ls));
        let fit = lasso_cd(&x, &y, &LassoConfig::new(lambda), None).unwrap();
        let closed = soft_threshold_closed_form(&ls, lambda).unwrap();
        for (a, b) in fit.w.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn objective_never_increases() {
    let (x, y) = gaussian_problem(50, 120, 4);
    let lm = lambda_max(&x, &y).unwrap();
    for frac in [0.5, 0.1, 0.01] {
        let fit = lasso_cd(&x, &y, &LassoConfig::new(frac * lm), None).unwrap();
        assert!(fit.max_objective_increase <= 1e-14 * fit.objective.max(1.0));
    }
}

#[test]
fn sweep_cap_reports_nonconvergence() {
    let (x, y) = gaussian_problem(50, 120, 5);
    let cfg = LassoConfig {
        max_sweeps: 1,
        ..LassoConfig::new(1e-3)
    };
    let fit = lasso_cd(&x, &y, &cfg, None).unwrap();
    assert!(!fit.converged);
    assert_eq!(fit.sweeps, 1);
}

#[test]
fn config_and_shape_errors() {
    let (x, y) = gaussian_problem(10, 5, 6);
    assert!(lasso_cd(&x, &y[..9], &LassoConfig::new(0.1), None).is_err());
    assert!(lasso_cd(&x, &y, &LassoConfig::new(-1.0), None).is_err());
    let bad_tol = LassoConfig {
        tol: 0.0,
        ..LassoConfig::new(0.1)
    };
    assert!(lasso_cd(&x, &y, &bad_tol, None).is_err());
    assert!(lasso_cd(&x, &y, &LassoConfig::new(0.1), Some(&[0.0; 3])).is_err());
}

#[test]
fn grid_shape() {
    let g = log_grid(2.0, 1e-4, 200).unwrap();
    assert_eq!(g.len(), 200);
    assert_eq!(g[0], 2.0);
    assert!((g[199] - 2e-4).abs() < 1e-15);
    let r0 = g[1] / g[0];
    assert!(g.windows(2).all(|p| p[1] < p[0] && ((p[1] / p[0]) / r0 - 1.0).abs() < 1e-12));
    assert_eq!(log_grid(1.0, 0.5, 1).unwrap(), vec![1.0]);
    assert!(log_grid(0.0, 0.5, 3).is_err());
    assert!(log_grid(1.0, 1.0, 3).is_err());
}

#[test]
fn path_starts_at_zero_and_matches_cold_starts() {
    let (x, y) = gaussian_problem(40, 60, 7);
    let lm = lambda_max(&x, &y).unwrap();
    let path = lasso_path(&x, &y, lm, 1e-2, 25).unwrap();
    assert!(path.solutions[0].iter().all(|&v| v == 0.0));
    assert!(path.converged.iter().all(|&c| c));
    for (lambda, warm) in path.lambdas.iter().zip(&path.solutions) {
        let cold = lasso_cd(&x, &y, &LassoConfig::new(*lambda), None).unwrap();
        for (a, b) in warm.iter().zip(&cold.w) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn orthonormal_path_support_grows() {
    let mut rng = SeededRng::new(8, 0);
    let x = orthonormal(40, 20, &mut rng);
    let y: Vec<f64> = (0..40).map(|_| rng.normal()).collect();
    let path = lasso_path(&x, &y, lambda_max(&x, &y).unwrap(), 1e-3, 50).unwrap();
    let sizes: Vec<usize> = path.solutions.iter().map(|w| w.iter().filter(|&&v| v != 0.0).count()).collect();
    assert!(sizes.windows(2).all(|s| s[0] <= s[1]));
}

#[test]
fn oracle_selection_rules() {
    let signal = SparseSignal::from_vector(vec![1.0, 0.0, 0.0]).unwrap();
    let path = LassoPath {
        lambdas: vec![3.0, 2.0, 1.0],
        solutions: vec![vec![0.0; 3], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]],
        converged: vec![true; 3],
        sweeps: vec![1; 3],
    };
    let sel = oracle_lambda_select(&path, &signal).unwrap();
    assert_eq!((sel.index, sel.lambda, sel.l2_error_sq), (1, 2.0, 0.0));

    let single = LassoPath {
        lambdas: vec![0.5],
        solutions: vec![vec![0.3, 0.0, 0.1]],
        converged: vec![true],
        sweeps: vec![1],
    };
    assert_eq!(oracle_lambda_select(&single, &signal).unwrap().index, 0);
    let empty = LassoPath {
        lambdas: vec![],
        solutions: vec![],
        converged: vec![],
        sweeps: vec![],
    };
    assert!(oracle_lambda_select(&empty, &signal).is_err());
}

#[test]
fn oracle_ls_examples() {
    let mut rng = SeededRng::new(9, 0);
    let (n, d) = (60, 200);
    let x = gen_design(DesignKind::Rademacher, n, d, &mut rng).unwrap();
    let signal = gen_signal(&SignalSpec::constant(1.0, d, 4), &mut rng).unwrap();
    let y = mat_apply(&x, &signal.w_star).unwrap();
    assert_eq!(oracle_ls(&x, &y, &[]).unwrap(), vec![0.0; d]);
    let w = oracle_ls(&x, &y, &signal.support).unwrap();
    assert!(w.iter().zip(&signal.w_star).all(|(a, b)| (a - b).abs() < 1e-10));

    let noisy: Vec<f64> = y.iter().map(|v| v + rng.normal()).collect();
    let w = oracle_ls(&x, &noisy, &signal.support).unwrap();
    let fitted = mat_apply(&x, &w).unwrap();
    let resid: Vec<f64> = noisy.iter().zip(&fitted).map(|(a, b)| a - b).collect();
    for &j in &signal.support {
        assert!(dot(&x.column(j), &resid).abs() < 1e-8);
    }
}

#[test]
fn oracle_ls_singular() {
    let x = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 1.0]]).unwrap();
    assert!(matches!(oracle_ls(&x, &[1.0, 2.0], &[0, 1]), Err(Error::Singular)));
    assert!(matches!(oracle_ls(&x, &[1.0, 2.0], &[0, 1, 2]), Err(Error::Singular)));
}
