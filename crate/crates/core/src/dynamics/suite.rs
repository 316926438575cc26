//! Randomized checks of the scalar-recursion inequalities.
//!
//! Every property draws its own admissible parameters per case: targets
//! log-uniform on `[1e-3, 1e3]`, initialization scales log-uniform on
//! `[1e-8, 1e-1]`, and the step size as the largest admissible value times a
//! `U[0.1, 1]` factor. Inequalities are checked with zero tolerance. Time
//! bounds of the form "for all `t >= T`" are checked from `ceil(T)` on, and
//! bounds of the form "for all `t <= T`" up to `floor(T)`.

use std::sync::OnceLock;

use rand::RngCore;

use super::*;
use crate::descent::{decompose, estimate_wmax, gd_step, DescentState, DEFAULT_ETA_TILDE};
use crate::design::{gen_design, gen_noise, gen_signal, DesignKind, SignalSpec};
use crate::linalg::mat_apply;
use crate::par::{map_indexed, Execution};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub cases: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            cases: 200,
            seed: 0x5eed,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Description of the first failing case, by case index.
    pub first_failure: Option<String>,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

type Check = fn(&mut SeededRng, usize) -> std::result::Result<(), String>;

/// All properties, in report order.
pub const PROPERTIES: &[(&str, Check)] = &[
    ("monotone-below", monotone_below),
    ("monotone-above", monotone_above),
    ("gap-halving-below", gap_halving_below),
    ("gap-halving-above", gap_halving_above),
    ("exp-approach-near", exp_approach_near),
    ("exp-approach-far", exp_approach_far),
    ("selective-fitting", selective_fitting),
    ("sandwich", sandwich_holds),
    ("b-tube", b_tube),
    ("bounded-gap-halving-below", bounded_gap_halving_below),
    ("bounded-gap-halving-above", bounded_gap_halving_above),
    ("bounded-exp-approach-near", bounded_exp_approach_near),
    ("bounded-exp-approach-far", bounded_exp_approach_far),
    ("large-error-decay", large_error_decay),
    ("shrinkage-implication", shrinkage_implication),
    ("halving-schedule", halving_schedule),
    ("pair-product", pair_product),
    ("pair-wrong-sign", pair_wrong_sign),
    ("pair-sign-symmetry", pair_sign_symmetry),
    ("signal-time-bound", signal_time_bound),
    ("signal-noise-race", signal_noise_race),
];

pub fn run_suite(cfg: &SuiteConfig) -> Vec<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .map(|(p, &(name, check))| run_property(cfg, p, name, check))
        .collect()
}

/// Run a single named property.
pub fn run_named(cfg: &SuiteConfig, name: &str) -> Option<PropertyOutcome> {
    PROPERTIES
        .iter()
        .enumerate()
        .find(|(_, (n, _))| *n == name)
        .map(|(p, &(n, check))| run_property(cfg, p, n, check))
}

fn run_property(cfg: &SuiteConfig, p: usize, name: &'static str, check: Check) -> PropertyOutcome {
    let results = map_indexed(cfg.exec, cfg.cases, |case| {
        let mut rng = SeededRng::new(cfg.seed, ((p as u64) << 32) | case as u64);
        check(&mut rng, case)
    });
    let failures = results.iter().filter(|r| r.is_err()).count();
    let first_failure = results
        .iter()
        .enumerate()
        .find_map(|(i, r)| r.as_ref().err().map(|m| format!("case {i}: {m}")));
    PropertyOutcome {
        name,
        cases: cfg.cases,
        failures,
        first_failure,
    }
}

// ---- draws ----------------------------------------------------------------

fn target(rng: &mut SeededRng) -> f64 {
    rng.log_uniform(1e-3, 1e3)
}

fn step_factor(rng: &mut SeededRng) -> f64 {
    rng.uniform_in(0.1, 1.0)
}

fn ceil(t: f64) -> usize {
    t.ceil().max(0.0) as usize
}

/// Error trace of one off-support coordinate along a real descent run,
/// used as the "realistic" stream.
fn recorded_trace() -> &'static [f64] {
    static TRACE: OnceLock<Vec<f64>> = OnceLock::new();
    TRACE.get_or_init(|| {
        let (n, d, k) = (60, 120, 3);
        let mut rng = SeededRng::new(2024, 0);
        let x = gen_design(DesignKind::Rademacher, n, d, &mut rng).expect("valid design");
        let signal = gen_signal(&SignalSpec::constant(1.0, d, k), &mut rng).expect("valid signal");
        let xi = gen_noise(0.5, n, &mut rng).expect("valid noise");
        let mut y = mat_apply(&x, &signal.w_star).expect("shapes agree");
        y.iter_mut().zip(&xi).for_each(|(a, b)| *a += b);
        let z = estimate_wmax(&x, &y, DEFAULT_ETA_TILDE).expect("shapes agree");
        let coord = (0..d).find(|j| signal.w_star[*j] == 0.0).unwrap_or(0);
        let mut state = DescentState::new(d, 1e-6, 1.0 / (20.0 * z.z_hat));
        let mut trace = Vec::with_capacity(400);
        for _ in 0..400 {
            let wp: Vec<f64> = state.u.iter().map(|u| u * u).collect();
            let wm: Vec<f64> = state.v.iter().map(|v| v * v).collect();
            let dec = decompose(&wp, &wm, &signal, &x, &xi).expect("shapes agree");
            trace.push(dec.b[coord]);
            state = gd_step(&state, &x, &y).expect("small step stays finite");
        }
        trace
    })
}

fn draw_stream(rng: &mut SeededRng, bound: f64, case: usize) -> ErrorStream {
    match case % 4 {
        0 => ErrorStream::uniform(bound, rng.next_u64()),
        1 => ErrorStream::SignFollowing { bound },
        2 => ErrorStream::Adversarial { bound },
        _ => ErrorStream::replay(recorded_trace(), bound),
    }
}

fn fail<T: std::fmt::Debug>(what: &str, t: usize, detail: T) -> std::result::Result<(), String> {
    Err(format!("{what} at t = {t}: {detail:?}"))
}

// ---- noiseless recursion ----------------------------------------------------

fn monotone_below(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let x0 = xs * rng.log_uniform(1e-8, 1.0);
    let eta = step_factor(rng) / (8.0 * xs);
    let horizon = 2 * ceil(3.0 / (8.0 * eta * xs) * (xs * xs / (4.0 * x0 * 1e-6 * xs)).ln()) + 10;
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, horizon));
    for t in 1..seq.len() {
        if !(x0 <= seq[t - 1] && seq[t - 1] <= seq[t] && seq[t] <= xs) {
            return fail("x0 <= x_{t-1} <= x_t <= x*", t, (x0, seq[t - 1], seq[t], xs));
        }
    }
    Ok(())
}

fn monotone_above(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let x0 = xs * rng.uniform_in(1.0, 1.5);
    let eta = step_factor(rng) / (12.0 * xs);
    let horizon = 2 * ceil(3.0 / (8.0 * eta * xs) * 1e6f64.ln()) + 10;
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, horizon));
    for t in 1..seq.len() {
        if !(xs <= seq[t] && seq[t] <= seq[t - 1] && seq[t - 1] <= x0) {
            return fail("x* <= x_t <= x_{t-1} <= x0", t, (xs, seq[t], seq[t - 1], x0));
        }
    }
    Ok(())
}

fn check_halved(seq: &[f64], xs: f64, from: usize) -> std::result::Result<(), String> {
    let half = (seq[0] - xs).abs() / 2.0;
    for (t, &x) in seq.iter().enumerate().skip(from) {
        if !((xs - x).abs() <= half) {
            return fail("|x* - x_t| <= |x0 - x*| / 2", t, (x, xs, half));
        }
    }
    Ok(())
}

fn gap_halving_below(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let x0 = xs * rng.uniform_in(0.5, 1.0);
    let eta = step_factor(rng) / (8.0 * xs);
    let t_half = ceil(1.0 / (4.0 * eta * xs));
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, 4 * t_half));
    check_halved(&seq, xs, t_half)
}

fn gap_halving_above(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let x0 = xs * (1.5 - 0.5 * rng.uniform());
    let eta = step_factor(rng) / (12.0 * xs);
    let t_half = ceil(1.0 / (8.0 * eta * xs));
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, 4 * t_half));
    check_halved(&seq, xs, t_half)
}

fn exp_approach_near(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let gap = xs * 0.5 * (1.0 - rng.uniform());
    let x0 = if rng.coin() { xs + gap } else { xs - gap };
    let eps = gap * rng.log_uniform(1e-6, 1.0) * 0.999;
    let eta = step_factor(rng) / (12.0 * xs);
    let t_eps = ceil(3.0 / (8.0 * eta * xs) * ((xs - x0).abs() / eps).ln());
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, 2 * t_eps + 10));
    for (t, &x) in seq.iter().enumerate().skip(t_eps) {
        if !((xs - x).abs() <= eps) {
            return fail("|x* - x_t| <= eps", t, (x, xs, eps));
        }
    }
    Ok(())
}

fn exp_approach_far(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let x0 = xs * 0.5 * rng.log_uniform(1e-12, 1.0);
    let eps = xs * rng.log_uniform(1e-6, 0.5);
    let eta = step_factor(rng) / (8.0 * xs);
    let t_eps = ceil(3.0 / (8.0 * eta * xs) * (xs * xs / (4.0 * x0 * eps)).ln());
    let seq = iterate_plain(&ScalarSequenceSpec::plain(x0, xs, eta, 2 * t_eps + 10));
    for (t, &x) in seq.iter().enumerate().skip(t_eps) {
        if !(xs - eps <= x && x <= xs) {
            return fail("x* - eps <= x_t <= x*", t, (x, xs, eps));
        }
    }
    Ok(())
}

// ---- bounded errors ---------------------------------------------------------

fn selective_fitting(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let b = rng.log_uniform(1e-3, 1e3);
    let x0 = rng.log_uniform(1e-16, 0.5);
    let eta = step_factor(rng) / (8.0 * b);
    let stream = match case % 3 {
        0 => ErrorStream::Constant(b),
        1 => ErrorStream::uniform(b, rng.next_u64()),
        _ => ErrorStream::replay(recorded_trace(), b),
    };
    let t_max = bound_noise_time(b, x0, eta).floor() as usize;
    let seq = iterate_growth(x0, eta, &stream, t_max);
    let cap = x0.sqrt();
    for (t, &x) in seq.iter().enumerate() {
        if !(x <= cap) {
            return fail("x_t <= sqrt(x0)", t, (x, cap));
        }
    }
    Ok(())
}

fn sandwich_holds(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let b = xs * rng.log_uniform(1e-3, 2.0);
    let x0 = (xs + b) * rng.log_uniform(1e-8, 1.0);
    let eta = step_factor(rng) / (16.0 * (xs + b));
    let horizon = 2 * ceil(15.0 / (32.0 * eta * xs) * (xs * xs / (x0 * 1e-6 * xs)).ln()).min(50_000);
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon,
    };
    let (lo, hi) = sandwich(&spec).map_err(|e| e.to_string())?;
    let mid = iterate_bounded(&spec);
    for t in 0..mid.len() {
        if !(0.0 <= lo[t] && lo[t] <= mid[t] && mid[t] <= hi[t] && hi[t] <= xs + b) {
            return fail("0 <= x-_t <= x_t <= x+_t <= x* + B", t, (lo[t], mid[t], hi[t], xs + b));
        }
    }
    Ok(())
}

/// Draws for the setting `B <= x*/5`, `eta <= 5/(96 x*)`.
fn tube_setting(rng: &mut SeededRng, max_b_ratio: f64) -> (f64, f64, f64) {
    let xs = target(rng);
    let b = xs * rng.log_uniform(1e-4, max_b_ratio);
    let eta = step_factor(rng) * 5.0 / (96.0 * xs);
    (xs, b, eta)
}

fn b_tube(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let (xs, b, eta) = tube_setting(rng, 0.2);
    let x0 = xs * 1.2 * rng.log_uniform(1e-6, 1.0);
    let horizon = 2 * ceil(15.0 / (32.0 * eta * xs) * (xs * xs / (x0 * 1e-3 * xs)).ln());
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon,
    };
    let seq = iterate_bounded(&spec);
    for t in 0..seq.len() - 1 {
        if seq[t + 1] == seq[t] {
            // The rounded map has reached a fixed point; nothing further to learn.
            break;
        }
        let (now, next) = ((seq[t] - xs).abs(), (seq[t + 1] - xs).abs());
        if now > b && !(next < now) {
            return fail("outside the tube the gap strictly shrinks", t, (seq[t], seq[t + 1], xs, b));
        }
        if now <= b && !(next <= b) {
            return fail("inside the tube the iterate stays", t, (seq[t], seq[t + 1], xs, b));
        }
    }
    Ok(())
}

fn bounded_gap_halving_below(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let (xs, b, eta) = tube_setting(rng, 1.0 / 9.0);
    let (lo, hi) = ((xs - b) / 2.0, xs - 5.0 * b);
    let x0 = lo + (hi - lo) * rng.uniform();
    let t_half = ceil(5.0 / (8.0 * eta * xs));
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon: 3 * t_half,
    };
    check_halved(&iterate_bounded(&spec), xs, t_half)
}

fn bounded_gap_halving_above(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let (xs, b, eta) = tube_setting(rng, 1.0 / 20.0);
    let (lo, hi) = (xs + 4.0 * b, 1.2 * xs);
    let x0 = lo + (hi - lo) * (1.0 - rng.uniform()) * 0.999_999;
    let t_half = ceil(1.0 / (4.0 * eta * xs));
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon: 3 * t_half,
    };
    check_halved(&iterate_bounded(&spec), xs, t_half)
}

fn bounded_exp_approach_near(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let (xs, b, eta) = tube_setting(rng, 0.1);
    let gap = b + (xs / 5.0 - b) * (1.0 - rng.uniform());
    let eps = (gap - b) * rng.uniform_in(0.01, 0.99);
    let x0 = if rng.coin() { xs + gap } else { xs - gap };
    let t_eps = ceil(15.0 / (32.0 * eta * xs) * ((xs - x0).abs() / eps).ln());
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon: 2 * t_eps + 10,
    };
    for (t, &x) in iterate_bounded(&spec).iter().enumerate().skip(t_eps) {
        if !((xs - x).abs() <= b + eps) {
            return fail("|x* - x_t| <= B + eps", t, (x, xs, b, eps));
        }
    }
    Ok(())
}

fn bounded_exp_approach_far(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let (xs, b, eta) = tube_setting(rng, 0.2);
    let eps = xs * rng.log_uniform(1e-6, 0.5);
    if xs - b - eps <= 0.0 {
        return Ok(());
    }
    let x0 = (xs - b - eps) * rng.log_uniform(1e-8, 1.0);
    let t_eps = ceil(15.0 / (32.0 * eta * xs) * (xs * xs / (x0 * eps)).ln());
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon: 2 * t_eps + 10,
    };
    for (t, &x) in iterate_bounded(&spec).iter().enumerate().skip(t_eps) {
        if !(xs - b - eps <= x && x <= xs + b) {
            return fail("x* - B - eps <= x_t <= x* + B", t, (x, xs, b, eps));
        }
    }
    Ok(())
}

fn large_error_decay(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let xs = target(rng);
    let b = xs * rng.log_uniform(1e-3, 10.0);
    let x0 = xs + b * rng.uniform_in(2.0, 4.0);
    let eta = step_factor(rng) / (20.0 * b);
    let t_decay = large_error_decay_time(xs, b, eta).map_err(|e| e.to_string())?;
    let spec = ScalarSequenceSpec {
        x0,
        x_star: xs,
        eta,
        stream: draw_stream(rng, b, case),
        horizon: 2 * ceil(t_decay),
    };
    let seq = iterate_bounded(&spec);
    if let Some(t) = seq.iter().position(|&x| x < 0.0) {
        return fail("x_t >= 0", t, seq[t]);
    }
    match hitting_time(&seq, xs + 2.0 * b, Direction::Down) {
        Some(t) if t <= ceil(t_decay) => Ok(()),
        other => fail("x_t <= x* + 2B by 1/(10 eta B)", ceil(t_decay), (other, xs, b)),
    }
}

fn shrinkage_implication(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let b = rng.log_uniform(1e-3, 1e3);
    let eta = step_factor(rng) / (8.0 * b);
    let alpha = rng.log_uniform(1e-8, 1e-1);
    let inv_alpha = 1.0 / alpha;
    // Longest prefix whose growth product stays within 1/alpha, plus one step past it.
    let mut errors = Vec::new();
    let (mut grow, mut shrink) = (1.0_f64, 1.0_f64);
    for t in 0..1_000_000 {
        let e = match case % 3 {
            0 => b,
            1 => b * rng.uniform(),
            _ => recorded_trace()[t % recorded_trace().len()].abs() * b / 0.5,
        }
        .min(b);
        let g = 1.0 + 8.0 * eta * e;
        let s = 1.0 - 4.0 * eta * e;
        grow = grow * g * g;
        shrink = shrink * s * s;
        errors.push(e);
        if grow <= inv_alpha {
            if !(shrink >= alpha) {
                return fail("growth <= 1/alpha implies shrink >= alpha", t, (grow, shrink, alpha));
            }
        } else {
            break;
        }
    }
    // The library function agrees with the running products.
    let (g_all, s_all) = shrinkage_floor(&errors, eta, alpha);
    if g_all != grow || s_all != shrink {
        return Err(format!("shrinkage_floor mismatch: {g_all} vs {grow}, {s_all} vs {shrink}"));
    }
    Ok(())
}

fn halving_schedule(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let b = rng.log_uniform(1e-3, 1e3);
    let eta = step_factor(rng) / (4.0 * b);
    let t_base = 1 + (rng.next_u32() % 20) as usize;
    let stages = 1 + (rng.next_u32() % 6) as usize;
    let mut p = Vec::new();
    for (i, len) in halving_intervals(t_base, stages).into_iter().enumerate() {
        let cap = b / (1u64 << i) as f64;
        for _ in 0..len {
            p.push(if case % 2 == 0 { cap } else { cap * rng.uniform_in(-1.0, 1.0) });
        }
        let product = halving_schedule_product(&p, eta);
        let bound = halving_schedule_bound(b, eta, t_base, i + 1);
        if !(product <= bound) {
            return fail("product <= (1 + 4 eta 2^-i B)^(2 (i+1) T_i)", p.len(), (i, product, bound));
        }
    }
    Ok(())
}

// ---- paired sequences -------------------------------------------------------

struct PairDraw {
    spec: ScalarSequenceSpec,
    alpha_sq: f64,
}

fn pair_draw(rng: &mut SeededRng, case: usize) -> PairDraw {
    let mag = target(rng);
    let xs = if rng.coin() { mag } else { -mag };
    let b = mag * rng.log_uniform(1e-3, 1.0);
    let alpha = rng.log_uniform(1e-8, 1e-1).min((mag / 4.0).sqrt());
    let alpha_sq = (alpha * alpha).min(mag / 4.0);
    let eta = step_factor(rng) / (12.0 * (mag + b));
    let horizon = 2 * ceil(3.0 / (8.0 * eta * mag) * (mag * mag / (4.0 * alpha_sq * 1e-3 * mag)).ln());
    PairDraw {
        spec: ScalarSequenceSpec {
            x0: alpha_sq,
            x_star: xs,
            eta,
            stream: draw_stream(rng, b, case),
            horizon,
        },
        alpha_sq,
    }
}

fn pair_product(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let d = pair_draw(rng, case);
    let (p, m) = iterate_pair(&d.spec).map_err(|e| e.to_string())?;
    let a4 = d.alpha_sq * d.alpha_sq;
    for t in 0..p.len() {
        if !(p[t] * m[t] <= a4) {
            return fail("x+_t x-_t <= alpha^4", t, (p[t], m[t], a4));
        }
        let lo = p[t].min(m[t]);
        if !(0.0 <= lo && lo <= d.alpha_sq) {
            return fail("0 <= min(x+_t, x-_t) <= alpha^2", t, (p[t], m[t], d.alpha_sq));
        }
    }
    Ok(())
}

fn pair_wrong_sign(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let d = pair_draw(rng, case);
    let (p, m) = iterate_pair(&d.spec).map_err(|e| e.to_string())?;
    // Recover b_t from the same stream by replaying it along x_t.
    let mut sampler = d.spec.stream.sampler();
    let mut envelope = d.alpha_sq;
    let wrong = if d.spec.x_star > 0.0 { &m } else { &p };
    for t in 0..wrong.len() {
        if !(wrong[t] <= envelope) {
            return fail("wrong-sign part <= alpha^2 prod (1 + 4 eta |b|)", t, (wrong[t], envelope));
        }
        if t + 1 < wrong.len() {
            let bt = sampler.next(t, p[t] - m[t], d.spec.x_star);
            envelope *= 1.0 + 4.0 * d.spec.eta * bt.abs();
        }
    }
    Ok(())
}

fn pair_sign_symmetry(rng: &mut SeededRng, case: usize) -> std::result::Result<(), String> {
    let d = pair_draw(rng, case);
    let (p, m) = iterate_pair(&d.spec).map_err(|e| e.to_string())?;
    let mirrored = ScalarSequenceSpec {
        x_star: -d.spec.x_star,
        stream: d.spec.stream.negated(),
        ..d.spec.clone()
    };
    let (p2, m2) = iterate_pair(&mirrored).map_err(|e| e.to_string())?;
    for t in 0..p.len() {
        if p[t].to_bits() != m2[t].to_bits() || m[t].to_bits() != p2[t].to_bits() {
            return fail("mirrored run swaps x+ and x- exactly", t, (p[t], m2[t], m[t], p2[t]));
        }
    }
    Ok(())
}

// ---- signal against noise ---------------------------------------------------

fn race_draw(rng: &mut SeededRng) -> (f64, f64, f64, f64, f64) {
    let xs = target(rng);
    let ys = xs / 12.0 * rng.log_uniform(1e-3, 1.0);
    let eps = xs * rng.log_uniform(1e-6, 0.5);
    let alpha = (eps.sqrt() / xs).min(1e-1) * rng.log_uniform(1e-3, 1.0);
    let eta = step_factor(rng) / (8.0 * xs);
    (xs, ys, eps, alpha, eta)
}

fn signal_time_bound(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let (xs, _, eps, alpha, eta) = race_draw(rng);
    let t_bound = ceil(bound_signal_time(xs, alpha, eps, eta));
    let seq = iterate_plain(&ScalarSequenceSpec::plain(alpha * alpha, xs, eta, t_bound));
    match hitting_time(&seq, xs - eps, Direction::Up) {
        Some(_) => Ok(()),
        None => fail("x_t >= x* - eps within the signal bound", t_bound, (xs, eps, alpha)),
    }
}

fn signal_noise_race(rng: &mut SeededRng, _: usize) -> std::result::Result<(), String> {
    let (xs, ys, eps, alpha, eta) = race_draw(rng);
    let horizon = ceil(bound_signal_time(xs, alpha, eps, eta)) + 1;
    let h = race(xs, ys, alpha, eps, eta, horizon);
    match (h.t_signal, h.t_noise) {
        (Some(s), Some(n)) if s > n => fail("t_signal <= t_noise", s, (s, n)),
        (None, _) => fail("signal reached within horizon", horizon, (xs, ys, alpha, eps)),
        _ => Ok(()),
    }
}
