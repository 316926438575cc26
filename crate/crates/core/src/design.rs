//! Problem instances (design, sparse truth and noise) and restricted-isometry
//! diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inf_norm, DenseMatrix};
use crate::rng::SeededRng;

/// Upper limit on the number of column subsets `rip_delta_exact` will visit.
pub const RIP_ENUMERATION_CAP: u128 = 200_000;

const JACOBI_TOL: f64 = 1e-12;

/// Row law of the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DesignKind {
    Rademacher,
    GaussianIsotropic,
    /// Gaussian rows with covariance `(1 - mu) I + mu 11^T`.
    GaussianEquicorrelated { mu: f64 },
    /// `sqrt(n) * I`; requires `n == d`. Deterministic.
    Orthonormal,
}

impl DesignKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DesignKind::GaussianEquicorrelated { mu } if !(0.0..1.0).contains(&mu) => Err(
                Error::param(format!("equicorrelation mu must lie in [0, 1), got {mu}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Draw an `n x d` design.
///
/// Entries are generated column by column, so for a fixed `(n, rng)` the
/// first `d'` columns of a `d`-column draw coincide with a `d'`-column draw.
/// Paired experiments across dimensions rely on this.
pub fn gen_design(kind: DesignKind, n: usize, d: usize, rng: &mut SeededRng) -> Result<DenseMatrix> {
    kind.validate()?;
    if n == 0 || d == 0 {
        return Err(Error::param("design dimensions must be positive"));
    }
    let mut data = vec![0.0; n * d];
    match kind {
        DesignKind::Rademacher => {
            for j in 0..d {
                for i in 0..n {
                    data[i * d + j] = rng.rademacher();
                }
            }
        }
        DesignKind::GaussianIsotropic => {
            for j in 0..d {
                for i in 0..n {
                    data[i * d + j] = rng.normal();
                }
            }
        }
        DesignKind::GaussianEquicorrelated { mu } => {
            let shared: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let (a, b) = ((1.0 - mu).sqrt(), mu.sqrt());
            for j in 0..d {
                for i in 0..n {
                    data[i * d + j] = a * rng.normal() + b * shared[i];
                }
            }
        }
        DesignKind::Orthonormal => {
            if n != d {
                return Err(Error::param(format!(
                    "orthonormal design needs n == d, got n = {n}, d = {d}"
                )));
            }
            return DenseMatrix::scaled_identity(n, (n as f64).sqrt());
        }
    }
    DenseMatrix::new(n, d, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SignalShape {
    /// Every supported coordinate has magnitude `gamma`.
    Constant { gamma: f64 },
    /// Magnitudes `base^0, ..., base^(k-1)`.
    Geometric { base: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignPattern {
    #[default]
    AllPositive,
    /// Each supported coordinate flipped independently with probability 1/2.
    RandomSigns,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub shape: SignalShape,
    pub d: usize,
    pub k: usize,
    pub signs: SignPattern,
    /// Draw the support from `0..pool` instead of `0..d`. Used to pair
    /// instances of different dimension.
    pub support_pool: Option<usize>,
}

impl SignalSpec {
    pub fn constant(gamma: f64, d: usize, k: usize) -> Self {
        Self {
            shape: SignalShape::Constant { gamma },
            d,
            k,
            signs: SignPattern::AllPositive,
            support_pool: None,
        }
    }

    pub fn geometric(base: f64, d: usize, k: usize) -> Self {
        Self {
            shape: SignalShape::Geometric { base },
            ..Self::constant(1.0, d, k)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.d {
            return Err(Error::param(format!(
                "sparsity must satisfy 1 <= k <= d, got k = {}, d = {}",
                self.k, self.d
            )));
        }
        if let Some(pool) = self.support_pool {
            if pool < self.k || pool > self.d {
                return Err(Error::param(format!(
                    "support pool {pool} must lie in [k, d] = [{}, {}]",
                    self.k, self.d
                )));
            }
        }
        match self.shape {
            SignalShape::Constant { gamma } if gamma == 0.0 || !gamma.is_finite() => {
                Err(Error::param("gamma must be finite and nonzero"))
            }
            SignalShape::Geometric { base } if !(base > 1.0) || !base.is_finite() => {
                Err(Error::param("geometric base must exceed 1"))
            }
            _ => Ok(()),
        }
    }
}

/// Ground truth `w*` with its support and magnitude summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    pub w_star: Vec<f64>,
    /// Sorted ascending.
    pub support: Vec<usize>,
    pub w_max: f64,
    pub w_min: f64,
    pub kappa: f64,
}

impl SparseSignal {
    /// Build from an explicit vector; the support is its set of nonzeros.
    pub fn from_vector(w_star: Vec<f64>) -> Result<Self> {
        if w_star.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("signal entries must be finite"));
        }
        let support: Vec<usize> = (0..w_star.len()).filter(|&i| w_star[i] != 0.0).collect();
        let (w_max, w_min) = if support.is_empty() {
            (0.0, 0.0)
        } else {
            support.iter().fold((0.0_f64, f64::INFINITY), |(hi, lo), &i| {
                let a = w_star[i].abs();
                (hi.max(a), lo.min(a))
            })
        };
        let kappa = if w_min > 0.0 { w_max / w_min } else { 1.0 };
        Ok(Self {
            w_star,
            support,
            w_max,
            w_min,
            kappa,
        })
    }

    pub fn dim(&self) -> usize {
        self.w_star.len()
    }

    /// `+1` on S+, `-1` on S-, `0` off the support.
    pub fn signs(&self) -> Vec<i8> {
        self.w_star
            .iter()
            .map(|&x| {
                if x > 0.0 {
                    1
                } else if x < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }

    pub fn support_mask(&self) -> Vec<bool> {
        self.w_star.iter().map(|&x| x != 0.0).collect()
    }
}

pub fn gen_signal(spec: &SignalSpec, rng: &mut SeededRng) -> Result<SparseSignal> {
    spec.validate()?;
    let pool = spec.support_pool.unwrap_or(spec.d);
    let support = rng.sample_indices(pool, spec.k);
    let mut w = vec![0.0; spec.d];
    for (rank, &i) in support.iter().enumerate() {
        let mag = match spec.shape {
            SignalShape::Constant { gamma } => gamma,
            SignalShape::Geometric { base } => base.powi(rank as i32),
        };
        w[i] = mag;
    }
    if spec.signs == SignPattern::RandomSigns {
        for &i in &support {
            if rng.coin() {
                w[i] = -w[i];
            }
        }
    }
    SparseSignal::from_vector(w)
}

/// `n` i.i.d. `N(0, sigma^2)` draws.
pub fn gen_noise(sigma: f64, n: usize, rng: &mut SeededRng) -> Result<Vec<f64>> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!("noise level must be >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    Ok((0..n).map(|_| sigma * rng.normal()).collect())
}

/// `||X^T xi / n||_inf`.
pub fn max_noise_stat(x: &DenseMatrix, xi: &[f64]) -> Result<f64> {
    if xi.len() != x.rows() {
        return Err(Error::dim("max_noise_stat", x.rows(), xi.len()));
    }
    let mut g = vec![0.0; x.cols()];
    x.t_apply_into(xi, &mut g);
    Ok(inf_norm(&g) / x.rows() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RipMethod {
    ExactEnumeration,
    InfinityBoundSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipCertificate {
    pub sparsity: usize,
    pub delta: f64,
    pub method: RipMethod,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return acc;
        }
    }
    acc
}

/// Exact restricted isometry constant of `X / sqrt(n)` at sparsity `s`,
/// by enumerating every `s`-column submatrix.
pub fn rip_delta_exact(x: &DenseMatrix, s: usize) -> Result<RipCertificate> {
    let d = x.cols();
    if s == 0 || s > d {
        return Err(Error::param(format!("sparsity must satisfy 1 <= s <= d, got {s}")));
    }
    let subsets = binomial(d, s);
    if subsets > RIP_ENUMERATION_CAP {
        return Err(Error::Capacity {
            subsets,
            cap: RIP_ENUMERATION_CAP,
        });
    }
    let n = x.rows() as f64;
    let columns: Vec<Vec<f64>> = (0..d).map(|j| x.column(j)).collect();
    let inner = |a: usize, b: usize| -> f64 {
        columns[a].iter().zip(&columns[b]).map(|(p, q)| p * q).sum::<f64>() / n
    };

    let mut delta = 0.0_f64;
    let mut idx: Vec<usize> = (0..s).collect();
    let mut gram = vec![0.0; s * s];
    loop {
        for a in 0..s {
            for b in a..s {
                let v = inner(idx[a], idx[b]);
                gram[a * s + b] = v;
                gram[b * s + a] = v;
            }
        }
        let eig = symmetric_eigenvalues(gram.clone(), s);
        let (lo, hi) = eig
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        delta = delta.max(hi - 1.0).max(1.0 - lo);

        // Advance to the next combination in lexicographic order.
        let mut pos = s;
        while pos > 0 && idx[pos - 1] == d - s + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        idx[pos - 1] += 1;
        for q in pos..s {
            idx[q] = idx[q - 1] + 1;
        }
    }
    Ok(RipCertificate {
        sparsity: s,
        delta: delta.max(0.0),
        method: RipMethod::ExactEnumeration,
    })
}

/// Sampled lower estimate of the constant in `||(X^T X/n - I) z||_inf <= delta sqrt(k) ||z||_inf`
/// over random `k`-sparse Rademacher-signed `z`.
pub fn rip_inf_bound_sample(
    x: &DenseMatrix,
    k: usize,
    samples: usize,
    rng: &mut SeededRng,
) -> Result<RipCertificate> {
    let d = x.cols();
    if k == 0 || k > d {
        return Err(Error::param(format!("sparsity must satisfy 1 <= k <= d, got {k}")));
    }
    let mut delta = 0.0_f64;
    let mut z = vec![0.0; d];
    for _ in 0..samples {
        z.iter_mut().for_each(|v| *v = 0.0);
        for i in rng.sample_indices(d, k) {
            z[i] = rng.rademacher();
        }
        let r = rip_inf_residual(x, &z)?;
        delta = delta.max(r / (k as f64).sqrt());
    }
    Ok(RipCertificate {
        sparsity: k,
        delta,
        method: RipMethod::InfinityBoundSample,
    })
}

/// `||(X^T X / n - I) z||_inf`.
pub fn rip_inf_residual(x: &DenseMatrix, z: &[f64]) -> Result<f64> {
    if z.len() != x.cols() {
        return Err(Error::dim("rip_inf_residual", x.cols(), z.len()));
    }
    let n = x.rows() as f64;
    let mut xz = vec![0.0; x.rows()];
    x.apply_into(z, &mut xz);
    let mut g = vec![0.0; x.cols()];
    x.t_apply_into(&xz, &mut g);
    Ok(g
        .iter()
        .zip(z)
        .fold(0.0_f64, |m, (gi, zi)| m.max((gi / n - zi).abs())))
}

/// Eigenvalues of a symmetric `s x s` matrix (row-major) by cyclic Jacobi
/// rotations, iterated until the off-diagonal mass is below `1e-12`
/// relative to the Frobenius norm.
pub fn symmetric_eigenvalues(mut a: Vec<f64>, s: usize) -> Vec<f64> {
    assert_eq!(a.len(), s * s);
    let frob: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let tol = JACOBI_TOL * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..s)
            .flat_map(|p| ((p + 1)..s).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[p * s + q] * a[p * s + q])
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        for p in 0..s {
            for q in (p + 1)..s {
                let apq = a[p * s + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * s + p];
                let aqq = a[q * s + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for r in 0..s {
                    let arp = a[r * s + p];
                    let arq = a[r * s + q];
                    a[r * s + p] = c * arp - sn * arq;
                    a[r * s + q] = sn * arp + c * arq;
                }
                for r in 0..s {
                    let apr = a[p * s + r];
                    let aqr = a[q * s + r];
                    a[p * s + r] = c * apr - sn * aqr;
                    a[q * s + r] = sn * apr + c * aqr;
                }
            }
        }
    }
    (0..s).map(|i| a[i * s + i]).collect()
}

/// Threshold `2 sigma sqrt(2 log(2d)) / sqrt(n)` above which the smallest
/// signal coordinate clears twice the expected max-noise term.
pub fn phase_transition_threshold(sigma: f64, d: usize, n: usize) -> f64 {
    2.0 * sigma * (2.0 * (2.0 * d as f64).ln()).sqrt() / (n as f64).sqrt()
}
