//! Software twin of a 60 GHz software-defined radio baseband chain.
//!
//! The crate is organised bottom-up:
//!
//! * [`dsp`]: sample types, 16-bit quantization, pulse shaping and spectral
//!   measurement.
//! * [`airframe`]: the Golay trigger waveform, its ±1 matched template, the
//!   visual test waveform and the OFDM PPDU that announces a TX beam index.
//! * [`detector`]: the 8-way polyphase correlator and the bank of parallel
//!   pattern detectors (PPDs) that raise the waveform trigger.
//! * [`plsim`]: clock-stepped model of the programmable-logic dataflow
//!   (DAC/ADC FIFOs, software- and waveform-triggered reception, register
//!   file).
//! * [`channel`]: AWV codebook, array response and the geometric link model.
//!
//! Numeric kernels are generic over [`Real`] (`f32` or `f64`); the aliases
//! below pin the double-precision instantiations used by the simulator.

pub mod airframe;
pub mod channel;
pub mod detector;
pub mod dsp;
mod error;
mod num;
pub mod plsim;

pub use error::{Error, Result};
pub use num::Real;

pub use dsp::{ClockConfig, IqBlock, IqSample, R};

/// Double-precision complex sample.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex sample.
pub type C32 = num_complex::Complex<f32>;

/// Detector bank used by the PL model.
pub type DetectorBank = detector::DetectorBank<f64>;
/// Single-precision detector bank (bit-exact on raw 16-bit input).
pub type DetectorBankF32 = detector::DetectorBank<f32>;
/// Polyphase correlator in double precision.
pub type PolyphaseCorrelator = detector::PolyphaseCorrelator<f64>;
/// PPDU modem in double precision.
pub type PpduModem = airframe::PpduModem<f64>;
/// Link measurement in double precision.
pub type LinkMeasurement = airframe::LinkMeasurement<f64>;
/// Trigger waveform in double precision.
pub type TriggerWaveform = airframe::TriggerWaveform<f64>;
