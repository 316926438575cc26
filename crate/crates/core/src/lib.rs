//! Sparse linear regression by early-stopped gradient descent on the
//! over-parametrization `w = u*u - v*v`.
//!
//! The crate is organised around a handful of modules:
//!
//! * [`design`] draws problem instances and computes restricted isometry
//!   diagnostics.
//! * [`descent`] runs the constant-step and doubling-step algorithms and
//!   estimates `w_max` from data.
//! * [`dynamics`] iterates the one-dimensional multiplicative recursions that
//!   drive the analysis and checks their claimed inequalities.
//! * [`baselines`] has lasso coordinate descent and oracle least squares.
//! * [`experiments`] wires everything into seeded, aggregated sweeps.

pub mod baselines;
pub mod descent;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod par;
pub mod rng;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use rng::{Purpose, SeededRng};
