use thiserror::Error;

pub type Result<T> = std::result::Result<T, QwError>;

#[derive(Debug, Error)]
pub enum QwError {
    /// An argument fell outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numerical precondition (Hermiticity, normalization) was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("size error: {0}")]
    Size(String),

    #[error("resource limit: {what} needs {needed} entries, cap is {cap}")]
    Resource {
        what: String,
        needed: usize,
        cap: usize,
    },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("operator is not Bell-diagonal: largest off-diagonal magnitude {max_offdiag:.3e}")]
    NotBellDiagonal { max_offdiag: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for QwError {
    fn from(e: serde_json::Error) -> Self {
        QwError::Parse(e.to_string())
    }
}
