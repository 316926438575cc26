//! Comparison estimators: lasso by cyclic coordinate descent, including
//! warm-started paths and the orthonormal closed form, and least squares
//! restricted to the true support.
//!
//! The lasso objective is `(1/(2n)) ||X w - y||^2 + lambda ||w||_1`, which makes
//! the orthonormal solution `sign(w_ls) (|w_ls| - lambda)_+` with the same
//! `lambda`.

use std::cell::RefCell;
use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::design::SparseSignal;
use crate::error::{Error, Result};
use crate::linalg::{dist2_sq, dot, inf_norm, mat_t_apply, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    pub max_sweeps: usize,
    /// Convergence once a full sweep moves no coordinate by more than this.
    pub tol: f64,
}

impl LassoConfig {
    pub fn new(lambda: f64) -> Self {
        Self {
            lambda,
            max_sweeps: 100_000,
            tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::param("lasso lambda must be finite and >= 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("lasso tol must be > 0"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::param("lasso max_sweeps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub w: Vec<f64>,
    /// Coordinate sweeps performed, full and active-set alike.
    pub sweeps: usize,
    /// False when `max_sweeps` ran out first; `w` is still the last iterate.
    pub converged: bool,
    pub objective: f64,
    /// Largest sweep-over-sweep increase of the objective. Exact coordinate
    /// minimization never increases it, so anything above rounding is a bug.
    pub max_objective_increase: f64,
}

/// Column-major copy of the design with cached squared column norms.
struct Problem<'a> {
    n: usize,
    cols: Vec<Vec<f64>>,
    norms: Vec<f64>,
    /// `X^T y / n`.
    xty: Vec<f64>,
    /// Rows `X_j^T X / n` of the Gram matrix, filled on first use. Along a
    /// path the active set changes little, so rows are reused across fits.
    gram_rows: RefCell<HashMap<usize, Vec<f64>>>,
    y: &'a [f64],
}

impl<'a> Problem<'a> {
    fn new(x: &DenseMatrix, y: &'a [f64]) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::dim("lasso", x.rows(), y.len()));
        }
        let n = x.rows();
        let cols: Vec<Vec<f64>> = (0..x.cols()).map(|j| x.column(j)).collect();
        let norms = cols.iter().map(|c| dot(c, c) / n as f64).collect();
        let xty = cols.iter().map(|c| dot(c, y) / n as f64).collect();
        Ok(Self {
            n,
            cols,
            norms,
            xty,
            gram_rows: RefCell::new(HashMap::new()),
            y,
        })
    }

    /// Restricted Gram `X_A^T X_A / n`.
    fn gram(&self, active: &[usize]) -> DMatrix<f64> {
        let mut rows = self.gram_rows.borrow_mut();
        for &j in active {
            rows.entry(j).or_insert_with(|| {
                let nf = self.n as f64;
                self.cols.iter().map(|c| dot(&self.cols[j], c) / nf).collect()
            });
        }
        DMatrix::from_fn(active.len(), active.len(), |a, b| rows[&active[a]][active[b]])
    }

    fn objective(&self, resid: &[f64], w: &[f64], lambda: f64) -> f64 {
        dot(resid, resid) / (2.0 * self.n as f64) + lambda * w.iter().map(|v| v.abs()).sum::<f64>()
    }

    /// Exact minimization over coordinate `j`; returns the change in `w_j`.
    fn update(&self, j: usize, w: &mut [f64], resid: &mut [f64], lambda: f64) -> f64 {
        let c = self.norms[j];
        if c == 0.0 {
            let old = w[j];
            w[j] = 0.0;
            return old.abs();
        }
        let col = &self.cols[j];
        let z = dot(col, resid) / self.n as f64 + c * w[j];
        let new = soft(z, lambda) / c;
        let delta = new - w[j];
        if delta != 0.0 {
            w[j] = new;
            for (r, x) in resid.iter_mut().zip(col) {
                *r -= delta * x;
            }
        }
        delta.abs()
    }

    fn solve(&self, cfg: &LassoConfig, warm: Option<&[f64]>) -> Result<LassoFit> {
        cfg.validate()?;
        let d = self.cols.len();
        let mut w = match warm {
            Some(w0) if w0.len() != d => return Err(Error::dim("lasso warm start", d, w0.len())),
            Some(w0) => w0.to_vec(),
            None => vec![0.0; d],
        };
        let mut resid = self.y.to_vec();
        for (j, &wj) in w.iter().enumerate() {
            if wj != 0.0 {
                for (r, x) in resid.iter_mut().zip(&self.cols[j]) {
                    *r -= wj * x;
                }
            }
        }
        let lambda = cfg.lambda;
        let mut obj = self.objective(&resid, &w, lambda);
        let mut max_increase = 0.0_f64;
        let mut sweeps = 0;
        let mut converged = false;
        let mut track = |resid: &[f64], w: &[f64], obj: &mut f64| {
            let next = self.objective(resid, w, lambda);
            max_increase = max_increase.max(next - *obj);
            *obj = next;
        };
        // Full sweeps decide convergence; between them, sweep only the active set.
        while sweeps < cfg.max_sweeps {
            let mut change = 0.0_f64;
            for j in 0..d {
                change = change.max(self.update(j, &mut w, &mut resid, lambda));
            }
            sweeps += 1;
            track(&resid, &w, &mut obj);
            if change < cfg.tol {
                converged = true;
                break;
            }
            let active: Vec<usize> = (0..d).filter(|&j| w[j] != 0.0).collect();
            let mut inner = 0;
            while sweeps < cfg.max_sweeps && inner < ACTIVE_SWEEPS {
                let mut change = 0.0_f64;
                for &j in &active {
                    change = change.max(self.update(j, &mut w, &mut resid, lambda));
                }
                sweeps += 1;
                inner += 1;
                track(&resid, &w, &mut obj);
                if change < cfg.tol {
                    break;
                }
            }
            if inner == ACTIVE_SWEEPS {
                // Slow coordinate-wise progress: solve on the current face
                // directly, shrinking the face until no sign is blocked.
                let mut face = active;
                while face.len() > self.n {
                    let Some((w_new, r_new, o_new)) = self.shrink_support(&face, &w, lambda) else {
                        break;
                    };
                    if !(o_new <= obj) {
                        break;
                    }
                    w = w_new;
                    resid = r_new;
                    obj = o_new;
                    face.retain(|&j| w[j] != 0.0);
                }
                let mut factor = match face.len() {
                    0 => None,
                    s if s > self.n => None,
                    _ => self.gram(&face).cholesky(),
                };
                while let Some(f) = factor.take() {
                    let Some((w_new, r_new, o_new)) = self.refine(&face, &f, &w, lambda) else {
                        break;
                    };
                    if !(o_new <= obj) {
                        break;
                    }
                    w = w_new;
                    resid = r_new;
                    obj = o_new;
                    // Downdate the factor for every coordinate that left the face.
                    let before = face.len();
                    let mut f = f;
                    for pos in (0..face.len()).rev() {
                        if w[face[pos]] == 0.0 {
                            face.remove(pos);
                            f = f.remove_column(pos);
                        }
                    }
                    if face.len() < before && !face.is_empty() {
                        factor = Some(f);
                    }
                }
            }
        }
        Ok(LassoFit {
            w,
            sweeps,
            converged,
            objective: obj,
            max_objective_increase: max_increase,
        })
    }

    /// More than `n` nonzeros: move along a direction `z` with `X_A z = 0`,
    /// which leaves the fit unchanged, in the sense that does not increase
    /// `||w||_1`, until one coordinate reaches zero.
    fn shrink_support(&self, active: &[usize], w: &[f64], lambda: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let n = self.n;
        if active.len() <= n {
            return None;
        }
        let basis = DMatrix::from_fn(n, n, |r, c| self.cols[active[c]][r]);
        let extra = active[n];
        let rhs = DVector::from_fn(n, |r, _| -self.cols[extra][r]);
        let zb = basis.lu().solve(&rhs)?;
        let mut z = vec![0.0; active.len()];
        z[..n].copy_from_slice(zb.as_slice());
        z[n] = 1.0;
        if z.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let slope: f64 = active.iter().zip(&z).map(|(&j, zi)| w[j].signum() * zi).sum();
        if slope > 0.0 {
            z.iter_mut().for_each(|v| *v = -*v);
        }
        let mut theta = f64::INFINITY;
        let mut blocking = None;
        for (a, &j) in active.iter().enumerate() {
            if z[a] * w[j] < 0.0 {
                let reach = -w[j] / z[a];
                if reach < theta {
                    theta = reach;
                    blocking = Some(j);
                }
            }
        }
        let blocking = blocking?;
        let mut next = w.to_vec();
        for (a, &j) in active.iter().enumerate() {
            let v = w[j] + theta * z[a];
            next[j] = if j == blocking || v * w[j] <= 0.0 { 0.0 } else { v };
        }
        let resid = self.residual(active, &next);
        let obj = self.objective(&resid, &next, lambda);
        Some((next, resid, obj))
    }

    /// `y - X_A w_A`.
    fn residual(&self, active: &[usize], w: &[f64]) -> Vec<f64> {
        let mut resid = self.y.to_vec();
        for &j in active {
            if w[j] != 0.0 {
                for (r, x) in resid.iter_mut().zip(&self.cols[j]) {
                    *r -= w[j] * x;
                }
            }
        }
        resid
    }

    /// Step toward the minimizer on the face where `active` keeps the signs
    /// it has in `w` and every other coordinate is zero, i.e. the solution of
    /// `G_A z = X_A^T y / n - lambda sign(w_A)`. The step stops where the
    /// first coordinate reaches zero, which is then dropped. The objective
    /// is convex along the segment and agrees with the face quadratic on it,
    /// so it does not increase. `factor` is the Cholesky factor of the
    /// restricted Gram. `None` when the solve is not finite.
    fn refine(
        &self,
        active: &[usize],
        factor: &Cholesky<f64, Dyn>,
        w: &[f64],
        lambda: f64,
    ) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let s = active.len();
        let rhs = DVector::from_fn(s, |a, _| {
            let j = active[a];
            self.xty[j] - lambda * w[j].signum()
        });
        let sol = factor.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let mut theta = 1.0_f64;
        let mut blocking = None;
        for (a, &j) in active.iter().enumerate() {
            if sol[a] * w[j] <= 0.0 {
                let reach = w[j] / (w[j] - sol[a]);
                if reach < theta {
                    theta = reach;
                    blocking = Some(j);
                }
            }
        }
        let mut next = vec![0.0; w.len()];
        for (a, &j) in active.iter().enumerate() {
            let v = w[j] + theta * (sol[a] - w[j]);
            // Rounding must not carry a coordinate across zero.
            next[j] = if Some(j) == blocking || v * w[j] <= 0.0 { 0.0 } else { v };
        }
        let resid = self.residual(active, &next);
        let obj = self.objective(&resid, &next, lambda);
        Some((next, resid, obj))
    }
}

/// Active-set sweeps between full sweeps before trying [`Problem::refine`].
const ACTIVE_SWEEPS: usize = 10;

#[inline]
fn soft(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for one `lambda`, optionally warm-started.
pub fn lasso_cd(x: &DenseMatrix, y: &[f64], cfg: &LassoConfig, warm_start: Option<&[f64]>) -> Result<LassoFit> {
    Problem::new(x, y)?.solve(cfg, warm_start)
}

/// `sign(w_i) (|w_i| - lambda)_+` coordinate-wise.
pub fn soft_threshold_closed_form(w_ls: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::param("soft threshold needs lambda >= 0"));
    }
    Ok(w_ls.iter().map(|&w| soft(w, lambda)).collect())
}

/// Smallest `lambda` whose lasso solution is zero: `||X^T y / n||_inf`.
pub fn lambda_max(x: &DenseMatrix, y: &[f64]) -> Result<f64> {
    Ok(inf_norm(&mat_t_apply(x, y)?) / x.rows() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoPath {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub solutions: Vec<Vec<f64>>,
    /// Per-entry convergence flag from the underlying fits.
    pub converged: Vec<bool>,
    /// Per-entry sweep counts.
    pub sweeps: Vec<usize>,
}

pub const DEFAULT_PATH_COUNT: usize = 200;
pub const DEFAULT_LAMBDA_MIN_RATIO: f64 = 1e-4;

/// `count` values from `lambda_max` down to `lambda_max * ratio`, equally
/// spaced in log scale.
pub fn log_grid(lambda_max: f64, lambda_min_ratio: f64, count: usize) -> Result<Vec<f64>> {
    if !(lambda_max > 0.0) || !lambda_max.is_finite() {
        return Err(Error::param("lambda_max must be finite and > 0"));
    }
    if !(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0) {
        return Err(Error::param("lambda_min_ratio must lie in (0, 1)"));
    }
    if count == 0 {
        return Err(Error::param("path needs at least one lambda"));
    }
    if count == 1 {
        return Ok(vec![lambda_max]);
    }
    let (top, step) = (lambda_max.ln(), lambda_min_ratio.ln() / (count - 1) as f64);
    Ok((0..count).map(|i| (top + step * i as f64).exp()).collect())
}

/// Warm-started path with default tolerances.
pub fn lasso_path(x: &DenseMatrix, y: &[f64], lambda_max: f64, lambda_min_ratio: f64, count: usize) -> Result<LassoPath> {
    lasso_path_with(x, y, &log_grid(lambda_max, lambda_min_ratio, count)?, &LassoConfig::new(0.0))
}

/// Warm-started path over an explicit decreasing grid; `template` supplies
/// the tolerance and sweep cap.
pub fn lasso_path_with(x: &DenseMatrix, y: &[f64], lambdas: &[f64], template: &LassoConfig) -> Result<LassoPath> {
    if lambdas.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::param("lasso path grid must be strictly decreasing"));
    }
    let problem = Problem::new(x, y)?;
    let mut solutions: Vec<Vec<f64>> = Vec::with_capacity(lambdas.len());
    let mut converged = Vec::with_capacity(lambdas.len());
    let mut sweeps = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cfg = LassoConfig { lambda, ..*template };
        let fit = problem.solve(&cfg, solutions.last().map(|w| w.as_slice()))?;
        converged.push(fit.converged);
        sweeps.push(fit.sweeps);
        solutions.push(fit.w);
    }
    Ok(LassoPath {
        lambdas: lambdas.to_vec(),
        solutions,
        converged,
        sweeps,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSelection {
    pub index: usize,
    pub lambda: f64,
    pub solution: Vec<f64>,
    pub l2_error_sq: f64,
}

/// Path entry closest to `w*` in l2; ties go to the larger `lambda`.
pub fn oracle_lambda_select(path: &LassoPath, signal: &SparseSignal) -> Result<LassoSelection> {
    if path.solutions.is_empty() {
        return Err(Error::param("oracle selection needs a nonempty path"));
    }
    let mut best = (0, f64::INFINITY);
    for (i, w) in path.solutions.iter().enumerate() {
        if w.len() != signal.dim() {
            return Err(Error::dim("oracle_lambda_select", signal.dim(), w.len()));
        }
        let e = dist2_sq(w, &signal.w_star);
        if e < best.1 {
            best = (i, e);
        }
    }
    Ok(LassoSelection {
        index: best.0,
        lambda: path.lambdas[best.0],
        solution: path.solutions[best.0].clone(),
        l2_error_sq: best.1,
    })
}

/// Least squares on the given columns (zeros elsewhere), via Cholesky on the
/// restricted normal equations.
pub fn oracle_ls(x: &DenseMatrix, y: &[f64], support: &[usize]) -> Result<Vec<f64>> {
    let (n, d) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(Error::dim("oracle_ls", n, y.len()));
    }
    let mut w = vec![0.0; d];
    if support.is_empty() {
        return Ok(w);
    }
    if support.len() > n {
        return Err(Error::Singular);
    }
    let xs = x.select_columns(support)?;
    let s = support.len();
    let xm = DMatrix::from_row_slice(n, s, xs.data());
    let gram = xm.transpose() * &xm;
    let rhs = xm.transpose() * DVector::from_column_slice(y);
    let chol = gram.cholesky().ok_or(Error::Singular)?;
    let sol = chol.solve(&rhs);
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    for (k, &j) in support.iter().enumerate() {
        w[j] = sol[k];
    }
    Ok(w)
}

#[cfg(test)]
mod tests;
