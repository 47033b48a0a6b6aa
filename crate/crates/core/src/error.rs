use crate::solver::RunTrace;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid estimator parameters: {0}")]
    InvalidParams(String),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    /// The iterate left the finite range. Carries the trace up to (and
    /// including) the last finite state for diagnosis.
    #[error("divergence at iteration {iter}: non-finite iterate")]
    Divergence { iter: usize, trace: Box<RunTrace> },

    #[error("missing cached minimizer (call ensure_reference first)")]
    MissingMinimizer,

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
