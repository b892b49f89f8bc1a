use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("Hurst parameter {0} outside the open interval (1/2, 1)")]
    InvalidHurst(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("covariance factorization failed at row {row}: smallest pivot {pivot:e}")]
    Factorization { row: usize, pivot: f64 },

    #[error("circulant embedding failed: eigenvalue {min:e} below -{tol:e} * {max:e}")]
    Embedding { min: f64, max: f64, tol: f64 },

    #[error("{what} of {requested} exceeds the configured maximum {max}")]
    TooLarge {
        what: &'static str,
        requested: usize,
        max: usize,
    },

    #[error("path diverged: non-finite state at step {index}")]
    Diverged { index: usize },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("unknown model '{0}'")]
    UnknownModel(String),

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("Jacobian flow degenerate at step {index}: |det| = {det:e}")]
    DegenerateFlow { index: usize, det: f64 },

    #[error("{diverged} of {total} paths diverged, above the 0.1% budget")]
    DivergenceBudget { diverged: usize, total: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
