//! Sample types, converter-boundary quantization and reference DSP
//! primitives (RRC pulse shaping, spectral null measurement).
//!
//! All internal processing is floating point; [`quantize`] is only applied
//! where the hardware converters sit (DAC output, ADC input).

use num_complex::Complex;
use rustfft::FftPlanner;

use crate::{Error, Real, Result};

/// Samples moved per PL clock (`f_sample / f_PL`).
pub const R: usize = 8;

/// Full-scale magnitude of one 16-bit component in raw LSBs.
pub const FULL_SCALE: f64 = 32768.0;

/// One 16-bit fixed-point IQ sample. Unit scale maps ±1.0 to ±2^15 LSB.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct IqSample {
    pub i: i16,
    pub q: i16,
}

impl IqSample {
    pub const ZERO: IqSample = IqSample { i: 0, q: 0 };

    pub const fn new(i: i16, q: i16) -> Self {
        IqSample { i, q }
    }

    /// Unit-scale complex value.
    pub fn to_complex<T: Real>(self) -> Complex<T> {
        let s = T::lit(1.0 / FULL_SCALE);
        Complex::new(T::lit(self.i as f64) * s, T::lit(self.q as f64) * s)
    }

    /// Complex value in raw LSB units (integer valued).
    pub fn raw<T: Real>(self) -> Complex<T> {
        Complex::new(T::lit(self.i as f64), T::lit(self.q as f64))
    }

    /// True when either component sits on a converter rail.
    pub fn is_railed(self) -> bool {
        self.i == i16::MAX || self.i == i16::MIN || self.q == i16::MAX || self.q == i16::MIN
    }

    pub fn to_le_bytes(self) -> [u8; 4] {
        let [i0, i1] = self.i.to_le_bytes();
        let [q0, q1] = self.q.to_le_bytes();
        [i0, i1, q0, q1]
    }

    pub fn from_le_bytes(b: [u8; 4]) -> Self {
        IqSample {
            i: i16::from_le_bytes([b[0], b[1]]),
            q: i16::from_le_bytes([b[2], b[3]]),
        }
    }
}

/// Serializes samples as interleaved little-endian int16, I then Q.
pub fn iq_to_bytes(samples: &[IqSample]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 4);
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Inverse of [`iq_to_bytes`]. Trailing bytes that do not form a whole
/// sample are rejected.
pub fn iq_from_bytes(bytes: &[u8]) -> Result<Vec<IqSample>> {
    if !bytes.len().is_multiple_of(4) {
        return Err(Error::param(format!(
            "IQ byte stream length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| IqSample::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// The unit of per-clock dataflow: exactly [`R`] samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IqBlock(pub [IqSample; R]);

impl IqBlock {
    pub const ZERO: IqBlock = IqBlock([IqSample::ZERO; R]);

    pub fn samples(&self) -> &[IqSample; R] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|s| *s == IqSample::ZERO)
    }

    /// Packs samples into blocks, zero-padding the final block.
    pub fn pack(samples: &[IqSample]) -> Vec<IqBlock> {
        samples
            .chunks(R)
            .map(|c| {
                let mut b = IqBlock::ZERO;
                b.0[..c.len()].copy_from_slice(c);
                b
            })
            .collect()
    }

    pub fn unpack(blocks: &[IqBlock]) -> Vec<IqSample> {
        blocks.iter().flat_map(|b| b.0).collect()
    }
}

/// Converter clocking. `R` is derived, never set directly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockConfig {
    pub f_ref: f64,
    pub f_pl: f64,
    pub f_sample: f64,
}

impl Default for ClockConfig {
    fn default() -> Self {
        ClockConfig {
            f_ref: 32e6,
            f_pl: 192e6,
            f_sample: 1.536e9,
        }
    }
}

impl ClockConfig {
    /// Samples per PL clock. Fails unless `f_sample / f_pl` is a positive
    /// integer.
    pub fn ratio(&self) -> Result<usize> {
        let r = self.f_sample / self.f_pl;
        if !(r.is_finite() && r >= 1.0) || (r - r.round()).abs() > 1e-9 {
            return Err(Error::param(format!("f_sample/f_pl = {r} is not a positive integer")));
        }
        Ok(r.round() as usize)
    }
}

/// Result of [`quantize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quantized {
    pub samples: Vec<IqSample>,
    /// Number of samples with at least one clamped component.
    pub clipped: usize,
}

const MAX_UNIT: f64 = 1.0 - 1.0 / FULL_SCALE;

fn quantize_component(x: f64) -> (i16, bool) {
    let clamped = x.clamp(-1.0, MAX_UNIT);
    let clipped = clamped != x || x.is_nan();
    let clamped = if x.is_nan() { 0.0 } else { clamped };
    ((clamped * FULL_SCALE).round() as i16, clipped)
}

/// Clamps unit-scale values to `[-1, 1 - 2^-15]` and rounds to the nearest
/// LSB. Saturation is reported through [`Quantized::clipped`].
pub fn quantize<T: Real>(x: &[Complex<T>]) -> Quantized {
    let mut clipped = 0;
    let samples = x
        .iter()
        .map(|c| {
            let (i, ci) = quantize_component(c.re.to_f64_lossy());
            let (q, cq) = quantize_component(c.im.to_f64_lossy());
            if ci || cq {
                clipped += 1;
            }
            IqSample { i, q }
        })
        .collect();
    Quantized { samples, clipped }
}

pub fn dequantize<T: Real>(x: &[IqSample]) -> Vec<Complex<T>> {
    x.iter().map(|s| s.to_complex()).collect()
}

/// Root-raised-cosine taps, `span * sps + 1` long, symmetric, unit energy.
pub fn rrc_taps<T: Real>(beta: f64, sps: usize, span: usize) -> Result<Vec<T>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::param(format!("roll-off {beta} outside [0, 1]")));
    }
    if sps < 1 {
        return Err(Error::param("sps must be at least 1"));
    }
    if span < 2 || !span.is_multiple_of(2) {
        return Err(Error::param(format!("span {span} must be even and >= 2")));
    }
    let n = span * sps + 1;
    let half = (n / 2) as isize;
    let pi = std::f64::consts::PI;
    let mut h: Vec<f64> = (0..n as isize)
        .map(|k| {
            let t = (k - half) as f64 / sps as f64;
            if t == 0.0 {
                1.0 - beta + 4.0 * beta / pi
            } else if beta > 0.0 && (1.0 - (4.0 * beta * t).powi(2)).abs() < 1e-9 {
                // t = ±T/(4β)
                beta / 2f64.sqrt()
                    * ((1.0 + 2.0 / pi) * (pi / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / pi) * (pi / (4.0 * beta)).cos())
            } else {
                ((pi * t * (1.0 - beta)).sin() + 4.0 * beta * t * (pi * t * (1.0 + beta)).cos())
                    / (pi * t * (1.0 - (4.0 * beta * t).powi(2)))
            }
        })
        .collect();
    // enforce exact symmetry before normalizing
    for k in 0..n / 2 {
        let avg = 0.5 * (h[k] + h[n - 1 - k]);
        h[k] = avg;
        h[n - 1 - k] = avg;
    }
    let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(h.into_iter().map(|v| T::lit(v / norm)).collect())
}

/// Zero-insertion upsampling by `n_up` followed by full convolution with
/// `taps`. Output length is `chips.len() * n_up + taps.len() - 1`.
pub fn upsample_shape<T: Real>(chips: &[T], n_up: usize, taps: &[T]) -> Result<Vec<Complex<T>>> {
    if chips.is_empty() {
        return Err(Error::param("empty chip sequence"));
    }
    if n_up < 1 {
        return Err(Error::param("upsampling factor must be at least 1"));
    }
    if taps.is_empty() {
        return Err(Error::param("empty tap vector"));
    }
    let mut out = vec![T::zero(); chips.len() * n_up + taps.len() - 1];
    for (c, &chip) in chips.iter().enumerate() {
        if chip == T::zero() {
            continue;
        }
        let base = c * n_up;
        for (k, &h) in taps.iter().enumerate() {
            out[base + k] += chip * h;
        }
    }
    Ok(out.into_iter().map(|re| Complex::new(re, T::zero())).collect())
}

/// Null-search threshold relative to the spectral peak.
pub const NULL_THRESHOLD_DB: f64 = -30.0;
/// Width of the magnitude-smoothing window as a fraction of `f_sample`.
pub const NULL_SEARCH_RESOLUTION: f64 = 1.0 / 128.0;

/// Width between the first spectral nulls on either side of DC.
///
/// The magnitude spectrum (zero-padded FFT, at least 8x the waveform
/// length) is smoothed with a moving average `f_sample / 128` wide, which
/// bridges the fine comb structure of repeated sequences. A null is the
/// first local minimum below [`NULL_THRESHOLD_DB`] found walking outward
/// from DC. The spectral peak must lie between the two nulls, otherwise
/// there is no main lobe around DC and the measurement fails.
pub fn measure_null_to_null_bw<T: Real>(waveform: &[Complex<T>], f_sample: f64) -> Result<f64> {
    if waveform.len() < 256 {
        return Err(Error::param(format!(
            "waveform of {} samples is shorter than 256",
            waveform.len()
        )));
    }
    let n = (8 * waveform.len()).next_power_of_two();
    let mut buf: Vec<Complex<T>> = waveform.to_vec();
    buf.resize(n, Complex::new(T::zero(), T::zero()));
    FftPlanner::<T>::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf.iter().map(|c| c.norm().to_f64_lossy()).collect();

    let half = ((NULL_SEARCH_RESOLUTION * n as f64 / 2.0).round() as usize).max(1);
    let width = (2 * half + 1) as f64;
    // circular moving average via prefix sums
    let mut prefix = vec![0.0; n + 2 * half + 1];
    for j in 0..n + 2 * half {
        let idx = (j + n - half) % n;
        prefix[j + 1] = prefix[j] + mag[idx];
    }
    let smooth: Vec<f64> = (0..n).map(|k| (prefix[k + 2 * half + 1] - prefix[k]) / width).collect();

    let peak = smooth.iter().cloned().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Measurement("degenerate (all-zero) waveform".into()));
    }
    let db: Vec<f64> = smooth.iter().map(|&m| 20.0 * (m / peak).max(1e-300).log10()).collect();
    let at = |step: isize| db[step.rem_euclid(n as isize) as usize];

    let find_null = |dir: isize| -> Option<usize> {
        (1..(n / 2) as isize)
            .find(|&s| at(dir * s) < NULL_THRESHOLD_DB && at(dir * (s + 1)) >= at(dir * s))
            .map(|s| s as usize)
    };
    let (upper, lower) = match (find_null(1), find_null(-1)) {
        (Some(u), Some(l)) => (u, l),
        _ => return Err(Error::Measurement("no spectral nulls around DC".into())),
    };
    let peak_bin = db
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| if k < n / 2 { k as isize } else { k as isize - n as isize })
        .unwrap_or(0);
    if peak_bin > upper as isize || peak_bin < -(lower as isize) {
        return Err(Error::Measurement(
            "spectral peak lies outside the nulls around DC (no main lobe at DC)".into(),
        ));
    }
    Ok((upper + lower) as f64 * f_sample / n as f64)
}
