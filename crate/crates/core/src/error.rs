use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// A caller broke an operation's precondition (value outside its range, bad bit count, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// The encoded frame did not fit in the byte budget.
    #[error("frame overflow: {needed} bytes needed, {available} available")]
    Overflow { needed: usize, available: usize },

    #[error("wrong length: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },

    #[error("invalid stream: {0}")]
    Stream(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
