//! Dense row-major matrices and the handful of vector kernels the rest of
//! the crate is built on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major `rows x cols` real matrix with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::param("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dim("DenseMatrix::new", rows * cols, data.len()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * d);
        for r in rows {
            if r.len() != d {
                return Err(Error::dim("DenseMatrix::from_rows", d, r.len()));
            }
            data.extend_from_slice(r);
        }
        Self::new(n, d, data)
    }

    /// `scale * I` of size `n x n`.
    pub fn scaled_identity(n: usize, scale: f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = scale;
        }
        Self::new(n, n, data)
    }

    /// Column-major construction; handy for generators that fill one
    /// column at a time.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::dim("DenseMatrix::from_columns", rows, c.len()));
            }
            for (i, &v) in c.iter().enumerate() {
                data[i * cols + j] = v;
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// Copy of the matrix restricted to the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty() {
            return Err(Error::param("column selection must be nonempty"));
        }
        let mut data = Vec::with_capacity(self.rows * idx.len());
        for i in 0..self.rows {
            let row = self.row(i);
            for &j in idx {
                if j >= self.cols {
                    return Err(Error::dim("select_columns", self.cols, j));
                }
                data.push(row[j]);
            }
        }
        Self::new(self.rows, idx.len(), data)
    }

    /// `X w` written into `out` without allocating.
    pub fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(w.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (o, row) in out.iter_mut().zip(self.data.chunks_exact(self.cols)) {
            *o = dot(row, w);
        }
    }

    /// `X^T r` written into `out` without allocating.
    pub fn t_apply_into(&self, r: &[f64], out: &mut [f64]) {
        debug_assert_eq!(r.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&ri, row) in r.iter().zip(self.data.chunks_exact(self.cols)) {
            if ri != 0.0 {
                axpy(ri, row, out);
            }
        }
    }

    /// `X^T X / n` as a dense `cols x cols` matrix. Only sensible for small `cols`.
    pub fn normalized_gram(&self) -> Vec<f64> {
        let d = self.cols;
        let n = self.rows as f64;
        let mut g = vec![0.0; d * d];
        for row in self.data.chunks_exact(d) {
            for a in 0..d {
                let ra = row[a];
                if ra == 0.0 {
                    continue;
                }
                for b in a..d {
                    g[a * d + b] += ra * row[b];
                }
            }
        }
        for a in 0..d {
            for b in a..d {
                let v = g[a * d + b] / n;
                g[a * d + b] = v;
                g[b * d + a] = v;
            }
        }
        g
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[allow(dead_code)]
pub(crate) fn norm2_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

pub(crate) fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Coordinate-wise product.
pub fn hadamard(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::dim("hadamard", a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).collect())
}

pub fn mat_apply(x: &DenseMatrix, w: &[f64]) -> Result<Vec<f64>> {
    if x.cols() != w.len() {
        return Err(Error::dim("mat_apply", x.cols(), w.len()));
    }
    let mut out = vec![0.0; x.rows()];
    x.apply_into(w, &mut out);
    Ok(out)
}

pub fn mat_t_apply(x: &DenseMatrix, r: &[f64]) -> Result<Vec<f64>> {
    if x.rows() != r.len() {
        return Err(Error::dim("mat_t_apply", x.rows(), r.len()));
    }
    let mut out = vec![0.0; x.cols()];
    x.t_apply_into(r, &mut out);
    Ok(out)
}

/// Largest absolute entry; zero for an empty slice.
pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
