use thiserror::Error;

/// Errors raised by the gain pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("{0} model has no pointwise density")]
    NoPointwiseDensity(&'static str),

    #[error("{family} model is not supported by {operation}")]
    UnsupportedFamily {
        family: &'static str,
        operation: &'static str,
    },

    #[error("quadrature did not converge at lag {lag} (error estimate {error_estimate:.3e})")]
    QuadratureFailed { lag: usize, error_estimate: f64 },

    #[error("covariance is indefinite: smallest eigenvalue {lambda_min:.3e} is below -1e-8")]
    InvalidCorrelation { lambda_min: f64 },

    #[error("bound diverges: {0}")]
    DivergentBound(String),

    #[error("brute-force search refused for {n_elements} elements (at most {limit})")]
    BruteForceRefused { n_elements: usize, limit: usize },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of a numerical routine rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureFailed { .. }
                | Error::InvalidCorrelation { .. }
                | Error::DivergentBound(_)
                | Error::InternalConsistency(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
