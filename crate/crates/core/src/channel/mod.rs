//! Geometric link between two nodes: AWV codebook, array response,
//! free-space spreading, optional reflections, CFO, AWGN and ADC clipping.

mod codebook;
mod link;
mod scene;

pub use codebook::{
    array_gain, check_band, default_codebook, quantize_component, steering_angle_deg, Awv, AwvCodebook, BAND_HZ,
    CODEBOOK_SIZE, ELEMENTS, SWEEP_START_DEG, SWEEP_STOP_DEG, WEIGHT_BITS, WEIGHT_STEP,
};
pub use link::{path_taps, propagate, Link, LinkSettings, Tap};
pub use scene::{fspl_db, ChannelScene, Path, SceneFile, DEFAULT_LINK_GAIN_DB, DEFAULT_NOISE_DBFS, SPEED_OF_LIGHT};
