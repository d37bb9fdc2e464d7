#![allow(dead_code)]

use mmsdr_core::airframe::{make_golay, make_template, make_trigger_waveform, TriggerTemplate};
use mmsdr_core::detector::{metric, DetectorBank, DetectionEvent};
use mmsdr_core::dsp::{quantize, IqBlock, IqSample};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn template() -> TriggerTemplate {
    make_template(&make_golay(32).unwrap()).unwrap()
}

pub fn xsync() -> Vec<Complex<f64>> {
    make_trigger_waveform::<f64>(&make_golay(32).unwrap()).unwrap().x_sync
}

pub fn mean_power(x: &[Complex<f64>]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

pub fn cnoise(rng: &mut impl Rng, power: f64) -> Complex<f64> {
    let s = (power / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re * s, im * s)
}

/// Brute-force `C[n] = Σ_k b[k] x[n − k]` on raw samples.
pub fn direct_corr(x: &[Complex<f64>], t: &TriggerTemplate) -> Vec<Complex<f64>> {
    (0..x.len())
        .map(|n| {
            (0..128)
                .filter(|&k| k <= n)
                .map(|k| x[n - k] * t.b[k] as f64)
                .sum()
        })
        .collect()
}

/// Brute-force metric series with the same silence guard as the bank.
pub fn direct_metric(x: &[Complex<f64>], t: &TriggerTemplate) -> Vec<f64> {
    let c = direct_corr(x, t);
    (0..x.len())
        .map(|n| {
            let e: f64 = x[n.saturating_sub(127)..=n].iter().map(|v| v.norm_sqr()).sum();
            metric(c[n], e, 128.0)
        })
        .collect()
}

/// Earliest `n` with four crossings 128 apart, per the detection rule.
pub fn direct_first_detection(m: &[f64]) -> Option<usize> {
    (384..m.len()).find(|&n| (0..4).all(|r| m[n - 128 * r] > 0.25))
}

pub fn raw(x: &[IqSample]) -> Vec<Complex<f64>> {
    x.iter().map(|s| s.raw()).collect()
}

/// Runs a fresh bank; returns the winning event of each trigger.
pub fn triggers(samples: &[IqSample]) -> Vec<DetectionEvent> {
    let mut bank = DetectorBank::<f64>::new(&template());
    IqBlock::pack(samples)
        .iter()
        .filter_map(|b| bank.step(b).winner().cloned())
        .collect()
}

/// `x` placed at `offset` in a zero stream of `total` samples, quantized.
pub fn embed(x: &[Complex<f64>], offset: usize, total: usize) -> Vec<IqSample> {
    let mut buf = vec![Complex::new(0.0, 0.0); total];
    buf[offset..offset + x.len()].copy_from_slice(x);
    quantize(&buf).samples
}
