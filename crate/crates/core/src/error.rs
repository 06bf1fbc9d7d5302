use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged at iteration {iter} (f = {value})")]
    Divergence { iter: usize, value: f64 },

    #[error("dense Hessian of size {size} exceeds guard {limit}")]
    SizeGuard { size: usize, limit: usize },

    #[error("not a strict saddle: spectral gap {gap:e} <= 0")]
    NotStrictSaddle { gap: f64 },

    #[error("classifier has no null vector (d = {d}, K = {k}, smallest singular value {sigma_min:e})")]
    NoNullVector { d: usize, k: usize, sigma_min: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
