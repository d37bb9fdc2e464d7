mod common;

use common::*;
use mmsdr_core::detector::{metric, DetectorBank, DetectorConfig, PolyphaseCorrelator};
use mmsdr_core::dsp::{quantize, IqBlock, IqSample, R};
use num_complex::Complex;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_raw(n: usize, seed: u64) -> Vec<IqSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| IqSample::new(rng.random(), rng.random())).collect()
}

fn polyphase<T: mmsdr_core::Real>(x: &[IqSample]) -> Vec<Complex<T>> {
    let mut c = PolyphaseCorrelator::<T>::new(&template());
    IqBlock::pack(x).iter().flat_map(|b| c.step_iq(b)).collect()
}

#[test]
fn polyphase_equals_direct_on_4096_samples() {
    let x = random_raw(4096, 11);
    let direct = direct_corr(&raw(&x), &template());
    let poly = polyphase::<f64>(&x);
    assert_eq!(poly, direct);
    // every partial sum is an integer below 2^24
    let poly32 = polyphase::<f32>(&x);
    for (a, b) in poly32.iter().zip(&direct) {
        assert_eq!((a.re as f64, a.im as f64), (b.re, b.im));
    }
}

proptest! {
    #[test]
    fn polyphase_equals_direct(v in prop::collection::vec((any::<i16>(), any::<i16>()), 1..400)) {
        let x: Vec<IqSample> = v.iter().map(|&(i, q)| IqSample::new(i, q)).collect();
        let direct = direct_corr(&raw(&x), &template());
        let poly = polyphase::<f64>(&x);
        prop_assert_eq!(&poly[..x.len()], &direct[..]);
    }

    #[test]
    fn metric_bounded(v in prop::collection::vec((-3000i16..3000, -3000i16..3000), 128)) {
        let x: Vec<Complex<f64>> = v.iter().map(|&(i, q)| Complex::new(i as f64, q as f64)).collect();
        let t = template();
        let c: Complex<f64> = (0..128).map(|k| x[127 - k] * t.b[k] as f64).sum();
        let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        let m = metric(c, e, 128.0);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
    }

    #[test]
    fn metric_scale_invariant(
        v in prop::collection::vec((-30000i16..30000, -30000i16..30000), 128),
        log_alpha in -10.0f64..3.0,
    ) {
        let x: Vec<Complex<f64>> = v.iter().map(|&(i, q)| Complex::new(i as f64, q as f64)).collect();
        let t = template();
        let eval = |a: f64| {
            let c: Complex<f64> = (0..128).map(|k| x[127 - k] * a * t.b[k] as f64).sum();
            let e: f64 = x.iter().map(|v| (v * a).norm_sqr()).sum();
            metric(c, e, 128.0)
        };
        let base = eval(1.0);
        prop_assume!(x.iter().map(|v| v.norm_sqr()).sum::<f64>() * 2f64.powf(2.0 * -10.0) > 128.0);
        prop_assert!((eval(2f64.powf(log_alpha)) - base).abs() < 1e-12);
    }
}

#[test]
fn metric_of_template_is_one() {
    let t = template();
    for alpha in [1.0, 3.0, 1000.0] {
        let x: Vec<Complex<f64>> = (0..128).map(|m| Complex::new(alpha * t.b[127 - m] as f64, 0.0)).collect();
        let m = direct_metric(&x, &t)[127];
        assert!((m - 1.0).abs() < 1e-12);
    }
}

#[test]
fn metric_under_noise_matches_frozen_monte_carlo() {
    // numpy oracle, 10^4 trials of b + CN(0, 0.1): mean 0.9098, std 0.00796
    let t = template();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trials = 10_000;
    let mut sum = 0.0;
    for _ in 0..trials {
        let x: Vec<Complex<f64>> =
            (0..128).map(|k| Complex::new(t.b[k] as f64, 0.0) + cnoise(&mut rng, 0.1)).collect();
        let c: Complex<f64> = (0..128).map(|k| x[k] * t.b[k] as f64).sum();
        let e: f64 = x.iter().map(|v| v.norm_sqr()).sum();
        // unit-scale window; the silence guard is for raw LSB units
        sum += c.norm_sqr() / (128.0 * e);
    }
    let mean = sum / trials as f64;
    assert!((mean - 0.9098).abs() < 1e-3, "mean metric {mean}");
}

#[test]
fn clean_trigger_declares_once_at_fourth_peak() {
    let x = xsync();
    let s = embed(&x, 1000, 4000);
    let m = direct_metric(&raw(&s), &template());
    let expect = direct_first_detection(&m).unwrap();
    let ev = triggers(&s);
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].sample_index as usize, expect);
    assert_eq!(ev[0].ppd_lag, expect % R);
    assert_eq!(ev[0].metric_values.len(), 4);
    assert!(ev[0].metric_values.iter().all(|&v| v > 0.25));
}

#[test]
fn every_offset_mod_8_is_covered() {
    let x = xsync();
    let mut lags = Vec::new();
    let mut latency = None;
    for s in 0..8 {
        let samples = embed(&x, 800 + s, 3000);
        let m = direct_metric(&raw(&samples), &template());
        let expect = direct_first_detection(&m).unwrap();
        let ev = triggers(&samples);
        assert_eq!(ev.len(), 1, "offset {s}");
        assert_eq!(ev[0].sample_index as usize, expect, "offset {s}");
        lags.push(ev[0].ppd_lag);
        let l = ev[0].sample_index as i64 - (800 + s + x.len()) as i64;
        assert_eq!(*latency.get_or_insert(l), l, "latency must not depend on the offset");
    }
    lags.sort();
    assert_eq!(lags, (0..8).collect::<Vec<_>>());
}

#[test]
fn aligned_ppd_declares() {
    let x = xsync();
    let samples = embed(&x, 1203, 3000);
    let m = direct_metric(&raw(&samples), &template());
    let expect = direct_first_detection(&m).unwrap();
    let mut bank = DetectorBank::<f64>::new(&template());
    let mut all = Vec::new();
    for b in IqBlock::pack(&samples) {
        all.extend(bank.step(&b).events);
    }
    assert!(all.iter().any(|e| e.sample_index as usize == expect && e.ppd_lag == expect % 8));
    // every declaring PPD must have 4 exact crossings on its own grid
    for e in &all {
        let n = e.sample_index as usize;
        assert!((0..4).all(|r| m[n - 128 * r] > 0.25), "{e:?}");
    }
}

#[test]
fn separated_triggers_are_independent() {
    let x = xsync();
    let mut buf = vec![Complex::new(0.0, 0.0); 12_000];
    buf[100..100 + x.len()].copy_from_slice(&x);
    buf[10_100..10_100 + x.len()].copy_from_slice(&x);
    assert_eq!(triggers(&quantize(&buf).samples).len(), 2);
}

#[test]
fn small_amplitude_still_detected() {
    let x: Vec<Complex<f64>> = xsync().iter().map(|v| v * 0.01).collect();
    assert_eq!(triggers(&embed(&x, 500, 2000)).len(), 1);
}

#[test]
fn pure_noise_raises_no_trigger() {
    // frozen bound: P(M > 1/4) per window is about (3/4)^127, so zero
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise: Vec<Complex<f64>> = (0..1_000_000).map(|_| cnoise(&mut rng, 1e-3)).collect();
    let s = quantize(&noise).samples;
    let mut bank = DetectorBank::<f64>::new(&template());
    let mut events = 0;
    for b in IqBlock::pack(&s) {
        events += bank.step(&b).events.len();
    }
    assert_eq!(events, 0);
    assert_eq!(bank.n_detect(), 0);
}

#[test]
fn detection_survives_cfo_up_to_fs_over_4096() {
    let x = xsync();
    for k in [0.0, 0.25, 0.5, 1.0] {
        let f = k / 4096.0;
        let rotated: Vec<Complex<f64>> = x
            .iter()
            .enumerate()
            .map(|(n, v)| v * Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * f * n as f64))
            .collect();
        assert_eq!(triggers(&embed(&rotated, 300, 2000)).len(), 1, "cfo {f} cycles/sample");
    }
}

#[test]
fn n_detect_counts_ppd0_only() {
    let x = xsync();
    let mut bank = DetectorBank::<f64>::new(&template());
    let mut ppd0 = 0;
    for s in 0..8 {
        let samples = embed(&x, 600 + s, 2400);
        for b in IqBlock::pack(&samples) {
            ppd0 += bank.step(&b).events.iter().filter(|e| e.ppd_lag == 0).count() as u64;
        }
    }
    assert!(ppd0 > 0);
    assert_eq!(bank.n_detect(), ppd0);
}

#[test]
fn f32_bank_agrees_with_f64() {
    let x = xsync();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = mean_power(&x);
    let noisy: Vec<Complex<f64>> = x.iter().map(|v| v + cnoise(&mut rng, p / 10.0)).collect();
    let s = embed(&noisy, 333, 2500);
    let mut a = DetectorBank::<f64>::new(&template());
    let mut b = DetectorBank::<f32>::new(&template());
    for blk in IqBlock::pack(&s) {
        assert_eq!(a.step(&blk).trigger, b.step(&blk).trigger);
    }
}

#[test]
fn tolerance_flag_accepts_jitter() {
    let cfg = DetectorConfig { tolerance: 1, ..DetectorConfig::default() };
    let mut bank = DetectorBank::<f64>::with_config(&template(), cfg);
    let s = embed(&xsync(), 200, 1500);
    let n: usize = IqBlock::pack(&s).iter().filter(|b| bank.step(b).trigger).count();
    assert_eq!(n, 1);
}

#[test]
fn reset_restores_initial_state() {
    let s = embed(&xsync(), 10, 1000);
    let mut bank = DetectorBank::<f64>::new(&template());
    let first: Vec<_> = IqBlock::pack(&s).iter().map(|b| bank.step(b)).collect();
    bank.reset();
    let second: Vec<_> = IqBlock::pack(&s).iter().map(|b| bank.step(b)).collect();
    assert_eq!(first, second);
}
