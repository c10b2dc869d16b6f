//! Change point localization for high-dimensional linear regression time series.
//!
//! The data model is a sequence of observations `(x_t, y_t)`, `t = 1..n`, with
//! `y_t = x_t' beta_t + eps_t` and `beta_t` piecewise constant in `t`. This crate
//! estimates the times at which `beta_t` changes:
//!
//! * [`dp`] — a penalized dynamic program over interval partitions, where each
//!   candidate segment is scored by the residual sum of squares of an
//!   interval-scaled Lasso fit ([`lasso`]);
//! * [`refine`] — a local refinement pass that re-estimates each preliminary
//!   change point by scanning a shrunken window and solving a two-segment
//!   group-penalized regression at every candidate split;
//! * [`tuning`] — odd/even-split cross-validation for the penalty parameters;
//! * [`sim`], [`eval`], [`mod@bench`] — a seeded simulation generator, the scaled
//!   Hausdorff evaluation metric, and a Monte-Carlo benchmark harness.
//!
//! Time indices are 1-based at the API boundary; intervals use the half-open
//! convention `(s, e] = {s+1, ..., e}` everywhere, so an interval maps directly
//! onto the 0-based row range `s..e` of the design matrix.

pub mod bench;
pub mod dp;
mod error;
pub mod eval;
pub mod lasso;
pub mod model;
pub mod refine;
pub mod sim;
#[cfg(feature = "testutil")]
pub mod testutil;
pub mod tuning;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
