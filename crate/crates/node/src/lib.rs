//! Control/data service for simulated SDR nodes, its client, and the
//! shared radio medium behind them.

pub mod client;
pub mod evk;
pub mod medium;
pub mod protocol;
pub mod server;
pub mod testbed;
pub mod transcript;

pub use client::{ClientError, ClientResult, NodeClient};
pub use evk::{EvkState, GainRegisters, SiverMode};
pub use medium::{Medium, MediumState, Side};
pub use protocol::{Command, ErrorKind, Response, MAX_SAMPLES};
pub use server::{serve, NodeConfig, RunningNode};
pub use testbed::Testbed;

#[derive(Debug, thiserror::Error)]
pub enum NodeError {
    #[error("cannot bind port {port}: {source}")]
    Bind { port: u16, source: std::io::Error },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sim(#[from] mmsdr_core::Error),
}
