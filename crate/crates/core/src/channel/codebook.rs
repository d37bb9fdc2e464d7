use std::f64::consts::PI;

use num_complex::Complex;

use crate::{Error, Result};

pub const CODEBOOK_SIZE: usize = 64;
pub const ELEMENTS: usize = 16;
pub const WEIGHT_BITS: u32 = 6;
/// Tunable carrier range of the radio.
pub const BAND_HZ: (f64, f64) = (57e9, 71e9);
pub const SWEEP_START_DEG: f64 = -45.0;
pub const SWEEP_STOP_DEG: f64 = 45.0;

const LEVELS: f64 = ((1u32 << WEIGHT_BITS) - 1) as f64;

/// Grid step of one weight component.
pub const WEIGHT_STEP: f64 = 2.0 / LEVELS;

/// Nearest point of `{−1 + m · 2/63}`.
pub fn quantize_component(v: f64) -> f64 {
    let m = ((v.clamp(-1.0, 1.0) + 1.0) / WEIGHT_STEP).round();
    -1.0 + m * WEIGHT_STEP
}

pub fn check_band(carrier_hz: f64) -> Result<()> {
    if (BAND_HZ.0..=BAND_HZ.1).contains(&carrier_hz) {
        Ok(())
    } else {
        Err(Error::param(format!("carrier {carrier_hz:e} Hz outside 57-71 GHz")))
    }
}

/// One antenna weight vector with 6-bit I and Q per element.
#[derive(Debug, Clone, PartialEq)]
pub struct Awv {
    pub weights: [Complex<f64>; ELEMENTS],
    /// Frequency at which the element spacing is half a wavelength.
    pub design_frequency: f64,
}

impl Awv {
    /// Quantizes arbitrary weights onto the grid.
    pub fn from_weights(w: [Complex<f64>; ELEMENTS], design_frequency: f64) -> Self {
        Awv {
            weights: w.map(|c| Complex::new(quantize_component(c.re), quantize_component(c.im))),
            design_frequency,
        }
    }

    /// Progressive-phase steering towards `azimuth_deg`.
    pub fn steering(azimuth_deg: f64, design_frequency: f64) -> Self {
        let s = azimuth_deg.to_radians().sin();
        let w = std::array::from_fn(|n| Complex::from_polar(1.0, PI * n as f64 * s));
        Self::from_weights(w, design_frequency)
    }

    pub fn uniform(design_frequency: f64) -> Self {
        Self::from_weights([Complex::new(1.0, 0.0); ELEMENTS], design_frequency)
    }

    /// `Σ conj(w_n) a_n(θ)` with a cosine element pattern and element
    /// spacing of half a wavelength at the design frequency.
    pub fn gain(&self, azimuth_deg: f64, carrier_hz: f64) -> Complex<f64> {
        array_gain(self, azimuth_deg, carrier_hz)
    }
}

pub fn array_gain(awv: &Awv, azimuth_deg: f64, carrier_hz: f64) -> Complex<f64> {
    let az = azimuth_deg.clamp(-90.0, 90.0).to_radians();
    let k = PI * (carrier_hz / awv.design_frequency) * az.sin();
    let element = az.cos();
    awv.weights
        .iter()
        .enumerate()
        .map(|(n, w)| w.conj() * Complex::from_polar(element, k * n as f64))
        .sum()
}

/// Steering angle of entry `k` of the default sweep.
pub fn steering_angle_deg(k: usize) -> f64 {
    SWEEP_START_DEG + k as f64 * (SWEEP_STOP_DEG - SWEEP_START_DEG) / (CODEBOOK_SIZE - 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct AwvCodebook {
    pub entries: Vec<Awv>,
    pub design_frequency: f64,
}

impl AwvCodebook {
    pub fn get(&self, index: usize) -> Result<&Awv> {
        self.entries
            .get(index)
            .ok_or_else(|| Error::param(format!("AWV index {index} outside 0..{}", self.entries.len())))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry whose steering angle is closest to `azimuth_deg`.
    pub fn nearest_index(&self, azimuth_deg: f64) -> usize {
        (0..self.entries.len())
            .min_by(|&a, &b| {
                let da = (steering_angle_deg(a) - azimuth_deg).abs();
                let db = (steering_angle_deg(b) - azimuth_deg).abs();
                da.total_cmp(&db)
            })
            .unwrap_or(0)
    }
}

/// 64 entries sweeping −45°..45° uniformly.
pub fn default_codebook(design_frequency: f64) -> Result<AwvCodebook> {
    check_band(design_frequency)?;
    Ok(AwvCodebook {
        entries: (0..CODEBOOK_SIZE)
            .map(|k| Awv::steering(steering_angle_deg(k), design_frequency))
            .collect(),
        design_frequency,
    })
}
