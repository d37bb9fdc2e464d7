use num_complex::Complex;

use super::{GolaySequence, GOLAY_LEN, TRIGGER_REPETITIONS};
use crate::dsp::{rrc_taps, upsample_shape};
use crate::{Error, Real, Result};

/// Upsampling factor of the trigger waveform.
pub const N_UP: usize = 4;
/// RRC roll-off of the trigger waveform.
pub const ROLL_OFF: f64 = 0.5;
/// RRC span in symbols (33 taps at `N_UP = 4`).
pub const RRC_SPAN: usize = 8;
/// Length of the ±1 matched template.
pub const TEMPLATE_LEN: usize = GOLAY_LEN * N_UP;
/// Peak amplitude of the trigger waveform (unit scale).
pub const TRIGGER_PEAK: f64 = 0.5;
/// Ramp + zeros + tone + zeros.
pub const TEST_WAVEFORM_LEN: usize = 150;

/// The rectangular-filter ±1 approximation of one shaped period of `g`,
/// time-reversed so that correlation is an FIR filter with these taps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriggerTemplate {
    pub b: [i8; TEMPLATE_LEN],
    pub norm_sq: u32,
}

impl TriggerTemplate {
    pub fn tap<T: Real>(&self, k: usize) -> T {
        T::lit(self.b[k] as f64)
    }
}

/// `b[4k + j] = 2 g[31 − k] − 1`.
pub fn make_template(g: &GolaySequence) -> Result<TriggerTemplate> {
    if g.len() != GOLAY_LEN {
        return Err(Error::param(format!("template needs a length-{GOLAY_LEN} sequence")));
    }
    let mut b = [0i8; TEMPLATE_LEN];
    for k in 0..GOLAY_LEN {
        let chip = 2 * g.g[GOLAY_LEN - 1 - k] as i8 - 1;
        for j in 0..N_UP {
            b[N_UP * k + j] = chip;
        }
    }
    let norm_sq = b.iter().map(|v| (*v as i32 * *v as i32) as u32).sum();
    Ok(TriggerTemplate { b, norm_sq })
}

/// `x_SYNC`: four BPSK repetitions of `g`, upsampled by 4 and RRC shaped.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerWaveform<T> {
    pub x_sync: Vec<Complex<T>>,
}

impl<T: Real> TriggerWaveform<T> {
    /// Unshaped length (`4 · 32 · 4`).
    pub const CORE_LEN: usize = TRIGGER_REPETITIONS * GOLAY_LEN * N_UP;

    pub fn len(&self) -> usize {
        self.x_sync.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_sync.is_empty()
    }
}

pub fn make_trigger_waveform<T: Real>(g: &GolaySequence) -> Result<TriggerWaveform<T>> {
    if g.is_empty() {
        return Err(Error::param("empty Golay sequence"));
    }
    let chips: Vec<T> = (0..TRIGGER_REPETITIONS)
        .flat_map(|_| g.g.iter().map(|&v| T::lit(2.0 * v as f64 - 1.0)))
        .collect();
    let taps = rrc_taps::<T>(ROLL_OFF, N_UP, RRC_SPAN)?;
    let mut x = upsample_shape(&chips, N_UP, &taps)?;
    let peak = x.iter().map(|c| c.re.abs().max(c.im.abs())).fold(T::zero(), T::max);
    let scale = T::lit(TRIGGER_PEAK) / peak;
    for v in x.iter_mut() {
        *v *= scale;
    }
    Ok(TriggerWaveform { x_sync: x })
}

/// 50-sample ramp (I rail, 0 → full scale), 25 zeros, 50-sample tone at
/// `f_sample / 16` with amplitude 0.5, 25 zeros.
pub fn make_test_waveform<T: Real>() -> Vec<Complex<T>> {
    let full = T::lit(1.0 - 1.0 / crate::dsp::FULL_SCALE);
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = Vec::with_capacity(TEST_WAVEFORM_LEN);
    for n in 0..50 {
        out.push(Complex::new(full * T::lit(n as f64 / 49.0), T::zero()));
    }
    out.extend(std::iter::repeat_n(zero, 25));
    for n in 0..50 {
        let ph = 2.0 * std::f64::consts::PI * n as f64 / 16.0;
        out.push(Complex::from_polar(T::lit(0.5), T::lit(ph)));
    }
    out.extend(std::iter::repeat_n(zero, 25));
    out
}
