use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite or otherwise unusable value.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The rejection sampler ran out of attempts.
    #[error("type sampling failed after {attempts} attempts")]
    Sampling { attempts: usize },

    /// The thresholded transition graph is not strongly connected, so no
    /// unique stationary distribution exists at this selection intensity.
    #[error("chain is not irreducible at alpha = {alpha}: {closed_classes} closed classes")]
    NotIrreducible { alpha: f64, closed_classes: usize },

    /// The stationary solve did not meet its residual tolerance.
    #[error("stationary solve residual {residual:e} exceeds tolerance {tol:e}")]
    SolverFailure { residual: f64, tol: f64 },

    /// An alpha sweep could not produce a distribution.
    #[error("alpha sweep failed: {0}")]
    Sweep(String),

    /// Too many Monte-Carlo samples had to be skipped.
    #[error("{skipped} of {total} samples skipped (more than 10%)")]
    ExcessiveSkips { skipped: usize, total: usize },

    /// Malformed input data (JSON, CSV).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
