use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not Hermitian (max |A - A^dagger| = {defect:.3e})")]
    NotHermitian { defect: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate spectrum: {0}")]
    Degenerate(String),
    #[error("Markov chain is not ergodic: {0} stationary directions")]
    NonErgodic(usize),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
