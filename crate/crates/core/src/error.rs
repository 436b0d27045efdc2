use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid system size: {0}")]
    InvalidSize(String),

    #[error("size limit exceeded: n = {n}, maximum {max}")]
    SizeLimit { n: usize, max: usize },

    #[error("model is not permutation symmetric over the intermediate qubits: {0}")]
    NotSymmetric(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("unsupported basis for this operation: {0}")]
    UnsupportedBasis(String),

    #[error("unsupported case {0}")]
    UnsupportedCase(u8),

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
