use crate::design::SparseSignal;
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Split of an iterate into the part fitting `w*` on its signed support and
/// everything else, with the two perturbation terms the analysis tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDecomposition {
    /// `1_{S+} w+ - 1_{S-} w-`.
    pub s: Vec<f64>,
    /// `1_{S^c} w + 1_{S-} w+ - 1_{S+} w-`.
    pub e: Vec<f64>,
    /// `X^T X e / n - X^T xi / n`.
    pub b: Vec<f64>,
    /// `(X^T X / n - I)(s - w*)`.
    pub p: Vec<f64>,
}

/// `w_plus = u*u`, `w_minus = v*v`.
pub fn decompose(
    w_plus: &[f64],
    w_minus: &[f64],
    signal: &SparseSignal,
    x: &DenseMatrix,
    xi: &[f64],
) -> Result<ErrorDecomposition> {
    let d = x.cols();
    for (len, what) in [
        (w_plus.len(), "decompose w_plus"),
        (w_minus.len(), "decompose w_minus"),
        (signal.dim(), "decompose w_star"),
    ] {
        if len != d {
            return Err(Error::dim(what, d, len));
        }
    }
    if xi.len() != x.rows() {
        return Err(Error::dim("decompose xi", x.rows(), xi.len()));
    }

    let mut s = vec![0.0; d];
    let mut e = vec![0.0; d];
    for j in 0..d {
        let ws = signal.w_star[j];
        if ws > 0.0 {
            s[j] = w_plus[j];
            e[j] = -w_minus[j];
        } else if ws < 0.0 {
            s[j] = -w_minus[j];
            e[j] = w_plus[j];
        } else {
            e[j] = w_plus[j] - w_minus[j];
        }
    }

    let n = x.rows() as f64;
    let gram_apply = |z: &[f64]| -> Vec<f64> {
        let mut xz = vec![0.0; x.rows()];
        x.apply_into(z, &mut xz);
        let mut out = vec![0.0; d];
        x.t_apply_into(&xz, &mut out);
        out.iter_mut().for_each(|o| *o /= n);
        out
    };

    let mut xt_xi = vec![0.0; d];
    x.t_apply_into(xi, &mut xt_xi);
    let b: Vec<f64> = gram_apply(&e)
        .into_iter()
        .zip(&xt_xi)
        .map(|(ge, nz)| ge - nz / n)
        .collect();

    let gap: Vec<f64> = s.iter().zip(&signal.w_star).map(|(a, b)| a - b).collect();
    let p: Vec<f64> = gram_apply(&gap)
        .into_iter()
        .zip(&gap)
        .map(|(g, z)| g - z)
        .collect();

    Ok(ErrorDecomposition { s, e, b, p })
}
