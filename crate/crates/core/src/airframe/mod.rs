//! Over-the-air artifacts: the Golay trigger waveform and its ±1 template,
//! the visual test waveform, and the OFDM PPDU carrying a TX AWV index.

mod crc;
mod golay;
mod ppdu;
mod trigger;

pub use crc::crc8;
pub use golay::{aperiodic_autocorrelation, make_golay, GolaySequence};
pub use ppdu::{
    decode_ppdu, encode_ppdu, DecodeFailure, LinkMeasurement, PpduConfig, PpduModem,
    SATURATION_FRACTION,
};
pub use trigger::{
    make_template, make_test_waveform, make_trigger_waveform, TriggerTemplate, TriggerWaveform,
    N_UP, ROLL_OFF, RRC_SPAN, TEMPLATE_LEN, TEST_WAVEFORM_LEN, TRIGGER_PEAK,
};

/// Length of the Golay sequence used by the trigger.
pub const GOLAY_LEN: usize = 32;
/// Number of back-to-back repetitions of `g` in the trigger.
pub const TRIGGER_REPETITIONS: usize = 4;
