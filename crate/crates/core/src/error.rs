use thiserror::Error;

use crate::descent::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {got}")]
    Dimension {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("enumeration of {subsets} subsets exceeds the cap of {cap}")]
    Capacity { subsets: u128, cap: u128 },

    /// The iterates blew up. Carries everything recorded up to the last
    /// finite iterate so callers can still select among earlier snapshots.
    #[error("iterates diverged at iteration {iteration} (sup norm {sup_norm:e})")]
    Divergence {
        iteration: usize,
        sup_norm: f64,
        partial: Box<Trajectory>,
    },

    #[error("restricted Gram matrix is singular")]
    Singular,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(op: &'static str, expected: usize, got: usize) -> Self {
        Error::Dimension { op, expected, got }
    }
}
