use thiserror::Error;

/// Errors surfaced by the modelling, sampling and optimisation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitboError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("value outside its domain: {0}")]
    Domain(String),

    #[error("cholesky factorisation failed with jitter up to {jitter:e}")]
    Conditioning { jitter: f64 },

    #[error("elliptical slice bracket collapsed below {width:e} radians")]
    SamplerStuck { width: f64 },

    #[error("hyperparameter fitting failed: {0}")]
    Fitting(String),

    #[error("adaptive quadrature did not converge on [{lo}, {hi}] (error estimate {error:e})")]
    NonConvergence { lo: f64, hi: f64, error: f64 },

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("at index {index}: {source}")]
    AtIndex {
        index: usize,
        #[source]
        source: Box<FitboError>,
    },
}

pub type Result<T> = std::result::Result<T, FitboError>;
