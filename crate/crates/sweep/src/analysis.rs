use mmsdr_core::dsp::{dequantize, IqSample};
use mmsdr_core::{LinkMeasurement, PpduModem, C64};

use crate::error::Result;
use crate::frame::PPDU_OFFSET;

/// Decodes the PPDU of one waveform-triggered transfer at the fixed
/// post-trigger offset. Short transfers are zero-extended, so a truncated
/// PPDU fails to decode rather than erroring.
pub fn analyze_transfer(modem: &PpduModem, iq: &[IqSample]) -> Result<LinkMeasurement> {
    let len = modem.config().len();
    let mut x: Vec<C64> = dequantize(iq.get(PPDU_OFFSET..).unwrap_or(&[]));
    if x.len() < len {
        x.resize(len, C64::new(0.0, 0.0));
    }
    Ok(modem.decode(&x)?)
}

/// One captured transfer and its analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub rx_awv: u8,
    /// Position within the transfers read for this RX index.
    pub transfer_index: usize,
    pub iq: Vec<IqSample>,
    pub analysis: LinkMeasurement,
}

impl SweepRecord {
    pub fn new(
        modem: &PpduModem,
        carrier_hz: f64,
        distance_m: f64,
        rx_awv: u8,
        transfer_index: usize,
        iq: Vec<IqSample>,
    ) -> Result<Self> {
        let analysis = analyze_transfer(modem, &iq)?;
        Ok(SweepRecord { carrier_hz, distance_m, rx_awv, transfer_index, iq, analysis })
    }

    pub fn decoded(&self) -> Option<(u8, f64)> {
        Some((self.analysis.tx_awv_index?, self.analysis.snr_db?))
    }
}
