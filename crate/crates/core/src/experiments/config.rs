use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::design::{phase_transition_threshold, DesignKind, SignPattern, SignalShape, SignalSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    InitSize,
    AlgComparison,
    PhaseTransitionGamma,
    PhaseTransitionSigma,
    PhaseTransitionN,
    DimensionBias,
    SampleComplexity,
    RipViolation,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::InitSize => "init-size",
            Family::AlgComparison => "alg-comparison",
            Family::PhaseTransitionGamma => "phase-transition-gamma",
            Family::PhaseTransitionSigma => "phase-transition-sigma",
            Family::PhaseTransitionN => "phase-transition-n",
            Family::DimensionBias => "dimension-bias",
            Family::SampleComplexity => "sample-complexity",
            Family::RipViolation => "rip-violation",
        }
    }

    /// Estimators run when the config does not list them.
    pub fn default_estimators(self) -> Vec<Estimator> {
        use Estimator::*;
        match self {
            Family::InitSize => vec![GdAlg1],
            Family::AlgComparison => vec![GdAlg1, GdAlg2],
            Family::SampleComplexity => vec![GdAlg2, Lasso],
            _ => vec![GdAlg2, Lasso, OracleLs, Null],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    GdAlg1,
    GdAlg2,
    Lasso,
    OracleLs,
    Null,
}

impl Estimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::GdAlg1 => "gd-alg1",
            Estimator::GdAlg2 => "gd-alg2",
            Estimator::Lasso => "lasso",
            Estimator::OracleLs => "oracle-ls",
            Estimator::Null => "null",
        }
    }
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Gamma,
    Sigma,
    N,
    D,
    K,
    Alpha,
    /// Equicorrelation of a Gaussian design.
    Mu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AutoTag {
    Auto,
}

/// Base step size: a number, or `"auto"` for `1 / (20 z_hat)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EtaSetting {
    Fixed(f64),
    Auto(AutoTag),
}

impl EtaSetting {
    pub const AUTO: EtaSetting = EtaSetting::Auto(AutoTag::Auto);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LassoSettings {
    pub path_count: usize,
    pub lambda_min_ratio: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for LassoSettings {
    fn default() -> Self {
        Self {
            path_count: crate::baselines::DEFAULT_PATH_COUNT,
            lambda_min_ratio: crate::baselines::DEFAULT_LAMBDA_MIN_RATIO,
            tol: 1e-10,
            max_sweeps: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Full-scale defaults.
    Paper,
    /// Reduced sizes that run in minutes.
    Desk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: Family,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub eta: EtaSetting,
    pub tau: usize,
    pub repetitions: usize,
    pub design: DesignKind,
    /// Magnitude profile; `null` means constant `gamma`.
    pub shape: Option<SignalShape>,
    pub signs: SignPattern,
    /// Descent iterations per run.
    pub iterations: usize,
    pub snapshot_every: usize,
    pub sweep: Option<Sweep>,
    pub base_seed: u64,
    pub lasso: LassoSettings,
    /// `null` means the family's default list.
    pub estimators: Option<Vec<Estimator>>,
    /// Draw the support from the first `pool` coordinates; `null` picks the
    /// smallest `d` of a dimension sweep, else `d`.
    pub support_pool: Option<usize>,
    /// Stop descent once the error part exceeds `sqrt(alpha)`.
    pub safety_stop: bool,
    /// Matched error in the algorithm comparison, as a multiple of the larger
    /// of the two best errors.
    pub match_factor: f64,
    /// Keep per-snapshot traces for trajectory plots.
    pub record_traces: bool,
}

impl ExperimentConfig {
    /// Defaults of the given scale for `family`.
    pub fn preset(preset: Preset, family: Family) -> Self {
        let mut c = ExperimentConfig {
            family,
            n: 500,
            d: 10_000,
            k: 25,
            gamma: 1.0,
            sigma: 1.0,
            alpha: 1e-12,
            eta: EtaSetting::AUTO,
            tau: 10,
            repetitions: 30,
            design: DesignKind::Rademacher,
            shape: None,
            signs: SignPattern::AllPositive,
            iterations: 2000,
            snapshot_every: 10,
            sweep: None,
            base_seed: 0,
            lasso: LassoSettings::default(),
            estimators: None,
            support_pool: None,
            safety_stop: false,
            match_factor: 2.0,
            record_traces: false,
        };
        if preset == Preset::Desk {
            c.n = 250;
            c.d = 2000;
            c.k = 10;
            c.repetitions = 15;
        }
        match family {
            Family::InitSize => {
                c.n = 100;
                c.k = 5;
                c.sigma = 0.5;
                c.eta = EtaSetting::Fixed(0.05);
                c.record_traces = true;
                c.sweep = Some(Sweep {
                    axis: Axis::Alpha,
                    values: vec![1e-2, 1e-6, 1e-12],
                });
            }
            Family::AlgComparison => {
                c.n = 250;
                c.k = 7;
                if preset == Preset::Desk {
                    c.d = 1000;
                    c.sigma = 0.1;
                    c.repetitions = 10;
                }
                c.shape = Some(SignalShape::Geometric { base: 2.0 });
                c.eta = EtaSetting::Fixed(1.0 / (20.0 * 64.0));
                c.iterations = 20_000;
                c.record_traces = true;
            }
            Family::PhaseTransitionGamma => {
                c.sweep = Some(Sweep {
                    axis: Axis::Gamma,
                    values: vec![0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0],
                });
            }
            Family::PhaseTransitionSigma => {
                c.sweep = Some(Sweep {
                    axis: Axis::Sigma,
                    values: vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
                });
            }
            Family::PhaseTransitionN => {
                c.gamma = 0.25;
                let base = c.n as f64;
                c.sweep = Some(Sweep {
                    axis: Axis::N,
                    values: [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|f| (f * base).round()).collect(),
                });
            }
            Family::DimensionBias => {
                if preset == Preset::Desk {
                    c.k = 5;
                    c.sigma = 0.5;
                }
                c.sweep = Some(Sweep {
                    axis: Axis::D,
                    values: vec![500.0, 2000.0, 8000.0],
                });
            }
            Family::SampleComplexity => {
                c.d = if preset == Preset::Desk { 2000 } else { 5000 };
                let k = c.k as f64;
                c.sweep = Some(Sweep {
                    axis: Axis::N,
                    values: [2.0, 4.0, 8.0, 16.0].iter().map(|f| f * k).collect(),
                });
            }
            Family::RipViolation => {
                c.design = DesignKind::GaussianEquicorrelated { mu: 0.5 };
                c.sweep = Some(Sweep {
                    axis: Axis::Gamma,
                    values: vec![0.0625, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0],
                });
            }
        }
        c
    }

    /// Preset defaults overlaid with a JSON object. An empty or
    /// whitespace-only text means no overrides; the family may come from the
    /// text or from `family`.
    pub fn from_json_str(text: &str, preset: Preset, family: Option<Family>) -> Result<Self> {
        let overrides: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(text)
                .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?
        };
        let Value::Object(map) = &overrides else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let family = match map.get("family") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("family: {e}")))?,
            None => family.unwrap_or(Family::PhaseTransitionGamma),
        };
        let mut base = serde_json::to_value(Self::preset(preset, family)).expect("config serializes");
        merge(&mut base, overrides);
        let cfg: Self = serde_json::from_value(base).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn estimators(&self) -> Vec<Estimator> {
        self.estimators.clone().unwrap_or_else(|| self.family.default_estimators())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n == 0 || self.d == 0 {
            return bad("n and d must be positive".into());
        }
        if self.k == 0 || self.k > self.d {
            return bad(format!("k must satisfy 1 <= k <= d, got k = {}, d = {}", self.k, self.d));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if let EtaSetting::Fixed(e) = self.eta {
            if !(e > 0.0) || !e.is_finite() {
                return bad(format!("eta must be positive, got {e}"));
            }
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return bad(format!("sigma must be >= 0, got {}", self.sigma));
        }
        if self.gamma == 0.0 || !self.gamma.is_finite() {
            return bad("gamma must be finite and nonzero".into());
        }
        if self.tau == 0 || self.repetitions == 0 || self.iterations == 0 || self.snapshot_every == 0 {
            return bad("tau, repetitions, iterations and snapshot_every must be positive".into());
        }
        if !(self.match_factor >= 1.0) {
            return bad("match_factor must be >= 1".into());
        }
        if self.lasso.path_count == 0 || !(self.lasso.lambda_min_ratio > 0.0 && self.lasso.lambda_min_ratio < 1.0) {
            return bad("lasso path needs path_count >= 1 and lambda_min_ratio in (0, 1)".into());
        }
        if !(self.lasso.tol > 0.0) || self.lasso.max_sweeps == 0 {
            return bad("lasso tol and max_sweeps must be positive".into());
        }
        if matches!(self.estimators.as_deref(), Some([])) {
            return bad("estimator list must not be empty".into());
        }
        self.design.validate().map_err(|e| Error::Config(e.to_string()))?;
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep values must not be empty".into());
            }
            for &v in &s.values {
                self.at(Some(v))?;
            }
        } else {
            self.check_point()?;
        }
        Ok(())
    }

    fn check_point(&self) -> Result<()> {
        self.signal_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.design.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.design == DesignKind::Orthonormal && self.n != self.d {
            return Err(Error::Config("orthonormal design needs n == d".into()));
        }
        Ok(())
    }

    /// Concrete settings at one sweep value (`None` for no sweep).
    pub fn at(&self, value: Option<f64>) -> Result<Self> {
        let mut c = self.clone();
        if c.support_pool.is_none() {
            if let Some(Sweep { axis: Axis::D, values }) = &self.sweep {
                let smallest = values.iter().fold(f64::INFINITY, |m, &v| m.min(v));
                c.support_pool = Some(as_count(smallest, "d")?);
            }
        }
        if let (Some(v), Some(s)) = (value, &self.sweep) {
            match s.axis {
                Axis::Gamma => c.gamma = v,
                Axis::Sigma => c.sigma = v,
                Axis::N => c.n = as_count(v, "n")?,
                Axis::D => c.d = as_count(v, "d")?,
                Axis::K => c.k = as_count(v, "k")?,
                Axis::Alpha => c.alpha = v,
                Axis::Mu => match c.design {
                    DesignKind::GaussianEquicorrelated { .. } => c.design = DesignKind::GaussianEquicorrelated { mu: v },
                    _ => return Err(Error::Config("a mu sweep needs the gaussian-equicorrelated design".into())),
                },
            }
        }
        c.sweep = None;
        if !(c.alpha > 0.0 && c.alpha < 1.0) || !(c.sigma >= 0.0) || c.gamma == 0.0 || !c.gamma.is_finite() {
            return Err(Error::Config(format!("sweep value {value:?} gives invalid settings")));
        }
        c.check_point()?;
        Ok(c)
    }

    pub fn signal_spec(&self) -> SignalSpec {
        SignalSpec {
            shape: self.shape.unwrap_or(SignalShape::Constant { gamma: self.gamma }),
            d: self.d,
            k: self.k,
            signs: self.signs,
            support_pool: self.support_pool,
        }
    }

    /// `2 sigma sqrt(2 log(2d)) / sqrt(n)` at these settings.
    pub fn threshold(&self) -> f64 {
        phase_transition_threshold(self.sigma, self.d, self.n)
    }

    /// Sweep values, or a single `None` when nothing is swept.
    pub fn points(&self) -> Vec<Option<f64>> {
        match &self.sweep {
            Some(s) => s.values.iter().map(|&v| Some(v)).collect(),
            None => vec![None],
        }
    }
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{what} sweep values must be positive integers, got {v}")))
    }
}

/// Internally tagged enums are replaced whole, since their fields depend on the tag.
fn is_tagged(v: &Value) -> bool {
    v.get("kind").is_some()
}

/// Recursive object merge; non-object values replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() && !is_tagged(slot) && !is_tagged(&v) => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, o) => *b = o,
    }
}
