use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("invalid problem data: {0}")]
    Validation(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("problem too large: {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(expected: usize, found: usize) -> Self {
        Error::Dimension { expected, found }
    }
}
