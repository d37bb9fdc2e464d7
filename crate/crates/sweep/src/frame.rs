use mmsdr_core::airframe::{
    make_golay, make_test_waveform, make_trigger_waveform, PpduConfig, GOLAY_LEN, N_UP, RRC_SPAN,
    TEST_WAVEFORM_LEN,
};
use mmsdr_core::dsp::{quantize, IqSample};
use mmsdr_core::channel::CODEBOOK_SIZE;
use mmsdr_core::{PpduModem, R, C64};

use crate::error::Result;

/// Nominal PPDU start inside a waveform-triggered transfer. The trigger is
/// declared at the last correlation peak, which trails the end of `x_SYNC`
/// by the RRC half-span; capture then starts on the next block boundary,
/// anywhere up to `R - 1` samples later. The decoder's timing search
/// absorbs the remaining spread.
pub const PPDU_OFFSET: usize = TEST_WAVEFORM_LEN + RRC_SPAN * N_UP / 2 - R / 2;

/// Builds announcement frames: `x_SYNC ‖ test waveform ‖ PPDU(index)`.
/// The quantized frames of all codebook indices are kept.
pub struct FrameBuilder {
    prefix: Vec<C64>,
    modem: PpduModem,
    frames: Vec<Vec<IqSample>>,
}

impl FrameBuilder {
    pub fn new(ppdu: PpduConfig) -> Result<Self> {
        let g = make_golay(GOLAY_LEN)?;
        let mut prefix = make_trigger_waveform::<f64>(&g)?.x_sync;
        prefix.extend(make_test_waveform::<f64>());
        let mut b = FrameBuilder { prefix, modem: PpduModem::new(ppdu)?, frames: Vec::new() };
        b.frames = (0..CODEBOOK_SIZE as u8)
            .map(|i| Ok(quantize(&b.frame_complex(i)?).samples))
            .collect::<Result<_>>()?;
        Ok(b)
    }

    pub fn modem(&self) -> &PpduModem {
        &self.modem
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.modem.config().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frame_complex(&self, index: u8) -> Result<Vec<C64>> {
        let mut x = self.prefix.clone();
        x.extend(self.modem.encode(index)?);
        Ok(x)
    }

    /// Quantized frame; `index` must be a codebook index.
    pub fn frame(&self, index: u8) -> &[IqSample] {
        &self.frames[index as usize]
    }
}
