use std::io;
use std::path::PathBuf;

use mmsdr_node::{ClientError, NodeError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("node: {0}")]
    Node(#[from] NodeError),
    #[error("node client: {0}")]
    Client(#[from] ClientError),
    #[error("announcement of TX index {index} failed: {source}")]
    Announcement { index: u8, source: ClientError },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] mmsdr_core::Error),
    #[error("dataset: {0}")]
    Dataset(String),
}

impl SweepError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        SweepError::Io { path: path.into(), source }
    }

    /// Process exit code. 2 is left to argument parsing.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Io { .. } => 3,
            SweepError::Node(_) | SweepError::Client(_) | SweepError::Announcement { .. } => 4,
            SweepError::Config(_) | SweepError::Sim(_) | SweepError::Dataset(_) => 5,
        }
    }
}

pub type Result<T, E = SweepError> = std::result::Result<T, E>;
