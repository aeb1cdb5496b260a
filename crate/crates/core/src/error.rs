use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("unknown party `{0}`")]
    InvalidParty(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("unknown graph preset `{0}`")]
    UnknownPreset(String),
    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),
    #[error("state-vector consistency: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
