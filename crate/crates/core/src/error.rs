use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("measurement failed: {0}")]
    Measurement(String),
    #[error("capacity exceeded: {requested} > {limit}")]
    Capacity { requested: usize, limit: usize },
    #[error("transmission already in progress")]
    Busy,
    #[error("reception not enabled (e_rx == 0)")]
    NotEnabled,
    #[error("requested {requested} transfers, {available} available")]
    Availability { requested: usize, available: usize },
    #[error("register {0} is read-only")]
    Permission(&'static str),
    #[error("unknown register {0:?}")]
    UnknownRegister(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
