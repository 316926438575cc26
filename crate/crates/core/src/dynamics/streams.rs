use crate::rng::SeededRng;

/// A sequence of perturbations `b_t` with a declared bound `|b_t| <= B`.
#[derive(Debug, Clone, PartialEq)]
pub enum ErrorStream {
    Zero,
    /// `b_t = c` for every `t`; the bound is `|c|`.
    Constant(f64),
    /// Independent uniform draws on `[-bound, bound]`, optionally negated.
    Uniform { bound: f64, seed: u64, negate: bool },
    /// `b_t = B sign(x_t - x*)`. Pulls the iterate towards the target.
    SignFollowing { bound: f64 },
    /// `b_t = -B sign(x_t - x*)`. Pushes the iterate away from the target,
    /// so it settles on the edge of the tube it started on the side of.
    Adversarial { bound: f64 },
    /// Recorded values replayed in a cycle.
    Trace { values: Vec<f64>, bound: f64 },
}

impl ErrorStream {
    pub fn uniform(bound: f64, seed: u64) -> Self {
        ErrorStream::Uniform {
            bound,
            seed,
            negate: false,
        }
    }

    /// Replay `values` rescaled so that their largest magnitude equals `bound`.
    pub fn replay(values: &[f64], bound: f64) -> Self {
        let peak = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let scale = if peak > 0.0 { bound / peak } else { 0.0 };
        let values = values
            .iter()
            .map(|v| (v * scale).clamp(-bound, bound))
            .collect();
        ErrorStream::Trace { values, bound }
    }

    pub fn bound(&self) -> f64 {
        match self {
            ErrorStream::Zero => 0.0,
            ErrorStream::Constant(c) => c.abs(),
            ErrorStream::Uniform { bound, .. }
            | ErrorStream::SignFollowing { bound }
            | ErrorStream::Adversarial { bound }
            | ErrorStream::Trace { bound, .. } => *bound,
        }
    }

    /// The stream `-b_t`. State-dependent streams are already odd in
    /// `x - x*` and map to themselves.
    pub fn negated(&self) -> Self {
        match self {
            ErrorStream::Constant(c) => ErrorStream::Constant(-c),
            ErrorStream::Uniform {
                bound,
                seed,
                negate,
            } => ErrorStream::Uniform {
                bound: *bound,
                seed: *seed,
                negate: !negate,
            },
            ErrorStream::Trace { values, bound } => ErrorStream::Trace {
                values: values.iter().map(|v| -v).collect(),
                bound: *bound,
            },
            other => other.clone(),
        }
    }

    pub(crate) fn sampler(&self) -> Sampler<'_> {
        let rng = match self {
            ErrorStream::Uniform { seed, .. } => Some(SeededRng::new(*seed, 0)),
            _ => None,
        };
        Sampler { stream: self, rng }
    }
}

pub(crate) struct Sampler<'a> {
    stream: &'a ErrorStream,
    rng: Option<SeededRng>,
}

fn sign(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else if z < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl Sampler<'_> {
    pub(crate) fn next(&mut self, t: usize, x: f64, x_star: f64) -> f64 {
        match self.stream {
            ErrorStream::Zero => 0.0,
            ErrorStream::Constant(c) => *c,
            ErrorStream::Uniform { bound, negate, .. } => {
                let rng = self.rng.as_mut().expect("uniform stream has a generator");
                let b = rng.uniform_in(-bound, *bound);
                if *negate {
                    -b
                } else {
                    b
                }
            }
            ErrorStream::SignFollowing { bound } => bound * sign(x - x_star),
            ErrorStream::Adversarial { bound } => -bound * sign(x - x_star),
            ErrorStream::Trace { values, .. } => {
                if values.is_empty() {
                    0.0
                } else {
                    values[t % values.len()]
                }
            }
        }
    }
}
