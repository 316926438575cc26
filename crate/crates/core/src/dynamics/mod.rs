//! One-dimensional multiplicative recursions
//! `x_{t+1} = x_t (1 - 4 eta (x_t - x* + b_t))^2` and the closed-form time
//! bounds that govern them.
//!
//! Every function here iterates in plain `f64`. Where two sequences are
//! compared with zero tolerance they are produced by the same code path, so
//! equal inputs give bit-equal outputs.

mod streams;
pub mod suite;

pub use streams::ErrorStream;
pub use suite::{run_suite, PropertyOutcome, SuiteConfig};

use crate::error::{Error, Result};

/// Settings of a single scalar recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSequenceSpec {
    pub x0: f64,
    pub x_star: f64,
    pub eta: f64,
    pub stream: ErrorStream,
    /// Number of steps; sequences have `horizon + 1` entries.
    pub horizon: usize,
}

impl ScalarSequenceSpec {
    pub fn plain(x0: f64, x_star: f64, eta: f64, horizon: usize) -> Self {
        Self {
            x0,
            x_star,
            eta,
            stream: ErrorStream::Zero,
            horizon,
        }
    }

    pub fn with_stream(mut self, stream: ErrorStream) -> Self {
        self.stream = stream;
        self
    }
}

/// `x (1 - a)^2` written as `x - a (2 - a) x` with `a = 4 eta (x - x* + b)`.
///
/// The increment form keeps full relative precision in the step when `x` is
/// close to the fixed point `x* - b`, so the computed sequence does not
/// overshoot it by an ulp the way the product form can.
#[inline]
fn step(x: f64, x_star: f64, eta: f64, b: f64) -> f64 {
    let a = 4.0 * eta * (x - x_star + b);
    x - a * (2.0 - a) * x
}

/// `x_{t+1} = x_t (1 - 4 eta (x_t - x*))^2`. The error stream is ignored.
pub fn iterate_plain(spec: &ScalarSequenceSpec) -> Vec<f64> {
    let mut out = Vec::with_capacity(spec.horizon + 1);
    let mut x = spec.x0;
    out.push(x);
    for _ in 0..spec.horizon {
        x = step(x, spec.x_star, spec.eta, 0.0);
        out.push(x);
    }
    out
}

/// `x_{t+1} = x_t (1 - 4 eta (x_t - x* + b_t))^2` under the configured stream.
pub fn iterate_bounded(spec: &ScalarSequenceSpec) -> Vec<f64> {
    iterate_with_errors(spec).0
}

/// Like [`iterate_bounded`] but also returns the errors that were applied.
pub fn iterate_with_errors(spec: &ScalarSequenceSpec) -> (Vec<f64>, Vec<f64>) {
    let mut out = Vec::with_capacity(spec.horizon + 1);
    let mut errs = Vec::with_capacity(spec.horizon);
    let mut sampler = spec.stream.sampler();
    let mut x = spec.x0;
    out.push(x);
    for t in 0..spec.horizon {
        let b = sampler.next(t, x, spec.x_star);
        errs.push(b);
        x = step(x, spec.x_star, spec.eta, b);
        out.push(x);
    }
    (out, errs)
}

/// Pure growth `x_{t+1} = x_t (1 + 4 eta b_t)^2`, the worst case for a
/// coordinate with no signal.
pub fn iterate_growth(x0: f64, eta: f64, stream: &ErrorStream, horizon: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut sampler = stream.sampler();
    let mut x = x0;
    out.push(x);
    for t in 0..horizon {
        let c = 1.0 + 4.0 * eta * sampler.next(t, x, 0.0);
        x = x * c * c;
        out.push(x);
    }
    out
}

/// Lower and upper comparison sequences: constant error `+B` and `-B`.
///
/// For any stream bounded by `B`, `0 <= lower <= x <= upper <= x* + B`.
pub fn sandwich(spec: &ScalarSequenceSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = spec.stream.bound();
    if !(spec.x0 > 0.0) || spec.x0 > spec.x_star + b {
        return Err(Error::param(format!(
            "sandwich needs 0 < x0 <= x* + B, got x0 = {}, x* + B = {}",
            spec.x0,
            spec.x_star + b
        )));
    }
    if !(spec.eta > 0.0) || spec.eta > 1.0 / (16.0 * (spec.x_star + b)) {
        return Err(Error::param("sandwich needs eta <= 1/(16 (x* + B))"));
    }
    let lower = iterate_bounded(&spec.clone().with_stream(ErrorStream::Constant(b)));
    let upper = iterate_bounded(&spec.clone().with_stream(ErrorStream::Constant(-b)));
    Ok((lower, upper))
}

/// `12 / (32 eta x*) * ln(x*^2 / (alpha^2 eps))`: iterations after which a
/// sequence started at `alpha^2` is within `eps` of `x*`.
pub fn bound_signal_time(x_star: f64, alpha: f64, eps: f64, eta: f64) -> f64 {
    12.0 / (32.0 * eta * x_star) * (x_star * x_star / (alpha * alpha * eps)).ln()
}

/// `ln(1 / x0^2) / (32 eta B)`: iterations during which pure growth with
/// errors bounded by `B` stays below `sqrt(x0)`.
pub fn bound_noise_time(b: f64, x0: f64, eta: f64) -> f64 {
    (1.0 / (x0 * x0)).ln() / (32.0 * eta * b)
}

/// `1 / (10 eta B)`: time for an iterate in `[x* + 2B, x* + 4B]` to fall
/// back to `x* + 2B`.
pub fn large_error_decay_time(_x_star: f64, b: f64, eta: f64) -> Result<f64> {
    if !(b > 0.0) || !(eta > 0.0) || eta > 1.0 / (20.0 * b) {
        return Err(Error::param("large_error_decay_time needs B > 0 and 0 < eta <= 1/(20 B)"));
    }
    Ok(1.0 / (10.0 * eta * b))
}

/// `(prod (1 + 8 eta e_t)^2, prod (1 - 4 eta e_t)^2)` for a stream of
/// nonnegative error magnitudes `e_t = |b_t| + |p_t|`.
pub fn shrinkage_floor(errors: &[f64], eta: f64, _alpha: f64) -> (f64, f64) {
    let mut grow = 1.0;
    let mut shrink = 1.0;
    for &e in errors {
        let e = e.abs();
        let g = 1.0 + 8.0 * eta * e;
        let s = 1.0 - 4.0 * eta * e;
        grow = grow * g * g;
        shrink = shrink * s * s;
    }
    (grow, shrink)
}

/// Lengths `T_i = 2^i T` of the intervals used by the halving schedule.
pub fn halving_intervals(t_base: usize, stages: usize) -> Vec<usize> {
    (0..stages).map(|i| t_base << i).collect()
}

/// `(1 + 4 eta 2^-i B)^(2 (i + 1) T_i)` with `i = stages - 1`.
///
/// Evaluated as a running product, one factor per multiplication, so that it
/// can be compared exactly against [`halving_schedule_product`].
pub fn halving_schedule_bound(b: f64, eta: f64, t_base: usize, stages: usize) -> f64 {
    if stages == 0 {
        return 1.0;
    }
    let i = stages - 1;
    let f = 1.0 + 4.0 * eta * b / (1u64 << i) as f64;
    let steps = (i + 1) * (t_base << i);
    let mut acc = 1.0;
    for _ in 0..steps {
        acc = acc * f * f;
    }
    acc
}

/// `prod_t (1 + 4 eta p_t)^2` in the same evaluation order as the bound.
pub fn halving_schedule_product(p: &[f64], eta: f64) -> f64 {
    let mut acc = 1.0;
    for &pt in p {
        let f = 1.0 + 4.0 * eta * pt;
        acc = acc * f * f;
    }
    acc
}

/// Positive and negative parts under opposite factors:
/// `x+ <- x+ (1 - 4 eta r)^2`, `x- <- x- (1 + 4 eta r)^2`, `r = x+ - x- - x* + b`.
/// Both start at `spec.x0`, playing the role of `alpha^2`.
pub fn iterate_pair(spec: &ScalarSequenceSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = spec.stream.bound();
    let a2 = spec.x0;
    if !(a2 > 0.0) || a2 > spec.x_star.abs() / 4.0 {
        return Err(Error::param("pair iteration needs 0 < alpha^2 <= |x*|/4"));
    }
    if !(spec.eta > 0.0) || spec.eta > 1.0 / (12.0 * (spec.x_star.abs() + b)) {
        return Err(Error::param("pair iteration needs eta <= 1/(12 (|x*| + B))"));
    }
    let mut sampler = spec.stream.sampler();
    let (mut p, mut m) = (a2, a2);
    let mut plus = vec![p];
    let mut minus = vec![m];
    for t in 0..spec.horizon {
        let x = p - m;
        let r = x - spec.x_star + sampler.next(t, x, spec.x_star);
        let cp = 1.0 - 4.0 * spec.eta * r;
        let cm = 1.0 + 4.0 * spec.eta * r;
        p = p * cp * cp;
        m = m * cm * cm;
        plus.push(p);
        minus.push(m);
    }
    Ok((plus, minus))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// First `t` with `x_t >= threshold`.
    Up,
    /// First `t` with `x_t <= threshold`.
    Down,
}

pub fn hitting_time(seq: &[f64], threshold: f64, direction: Direction) -> Option<usize> {
    seq.iter().position(|&x| match direction {
        Direction::Up => x >= threshold,
        Direction::Down => x <= threshold,
    })
}

/// First times the signal sequence reaches `x* - eps` and the noise
/// sequence reaches `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HittingTimes {
    pub t_signal: Option<usize>,
    pub t_noise: Option<usize>,
}

/// Signal with target `x_star` and noise with target `y_star`, both started at
/// `alpha^2` and run with the same step size.
pub fn race(x_star: f64, y_star: f64, alpha: f64, eps: f64, eta: f64, horizon: usize) -> HittingTimes {
    let a2 = alpha * alpha;
    let xs = iterate_plain(&ScalarSequenceSpec::plain(a2, x_star, eta, horizon));
    let ys = iterate_plain(&ScalarSequenceSpec::plain(a2, y_star, eta, horizon));
    HittingTimes {
        t_signal: hitting_time(&xs, x_star - eps, Direction::Up),
        t_noise: hitting_time(&ys, alpha, Direction::Up),
    }
}
