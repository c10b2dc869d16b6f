use thiserror::Error;

/// Errors produced by validation and the solver entry points.
///
/// Solver non-convergence is deliberately not an error: fits report a
/// `converged` flag and callers decide what to do with a best-iterate result.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid interval: {0}")]
    InvalidInterval(String),

    #[error("invalid change points: {0}")]
    InvalidChangePoints(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid covariance specification: {0}")]
    InvalidCovariance(String),
}
