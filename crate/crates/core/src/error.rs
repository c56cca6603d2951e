use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("singular linear system")]
    Singular,
    #[error("non-finite sample in finite difference")]
    NonFinite,
    #[error("algebra tag mismatch: {0}")]
    TagMismatch(String),
    #[error("zero divisor")]
    ZeroDivisor,
    #[error("not a Lie algebra element: {0}")]
    InvalidLieElement(String),
    #[error("invalid pseudoautomorphism pair: {0}")]
    InvalidPair(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
