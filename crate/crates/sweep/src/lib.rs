//! Beam-sweeping experiment harness: announcement frames, the RX-index
//! sweep over two node clients, transfer analysis, the dataset container
//! and SNR matrix export.

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod matrix;

pub use analysis::{analyze_transfer, SweepRecord};
pub use config::SweepConfig;
pub use dataset::{read_dataset, write_dataset, Dataset, DatasetHeader};
pub use error::{Result, SweepError};
pub use experiment::{run_announcement, run_campaign, run_sweep, SweepOutcome};
pub use frame::{FrameBuilder, PPDU_OFFSET};
pub use matrix::SnrMatrix;
