use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PnsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate source: {0}")]
    DegenerateSource(String),

    #[error("posterior undefined: no intensity can emit {n} photons")]
    UndefinedPosterior { n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

pub type Result<T> = std::result::Result<T, PnsError>;

pub(crate) fn invalid(msg: impl Into<String>) -> PnsError {
    PnsError::InvalidParameter(msg.into())
}
