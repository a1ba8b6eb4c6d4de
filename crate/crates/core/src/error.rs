use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("element index {index} out of range (size {size})")]
    OutOfRange { index: usize, size: usize },
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
    #[error("unknown schematic rule: {0}")]
    UnknownRule(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("size {0} exceeds configured cap {1}")]
    CapExceeded(usize, usize),
    #[error("malformed file: {0}")]
    File(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
