//! Trigger detection: an 8-way polyphase correlator feeding eight parallel
//! pattern detectors (PPDs), one per sample lag of the 8-sample PL clock.
//!
//! The correlation `C[n] = Σ_k b[k] x[n−k]` over the 128-tap template is
//! split as `C[n] = Σ_l C_l[n]`, `C_l[n] = Σ_{k<16} b[8k+l] x[n−8k−l]`. PPD
//! `λ` evaluates `n = 8m + λ` once per clock; its sub-filter `l` is fed the
//! decimated stream `x[8m + λ − l]` and is realised in transposed form.
//!
//! The detection metric is `|C[n]|² / (‖b‖² · ‖x_n‖²)`, bounded to `[0, 1]`.

use num_complex::Complex;

use crate::airframe::{TriggerTemplate, TEMPLATE_LEN};
use crate::dsp::{IqBlock, R};
use crate::Real;

/// Taps per polyphase branch.
pub const SUBFILTER_TAPS: usize = TEMPLATE_LEN / R;

/// Silence guard: one raw LSB² per template tap.
pub const SILENCE_GUARD: f64 = TEMPLATE_LEN as f64;

/// `|corr|² / (norm_sq · energy)`, or 0 when `energy` is below the silence
/// guard.
pub fn metric<T: Real>(corr: Complex<T>, energy: T, norm_sq: T) -> T {
    if energy < T::lit(SILENCE_GUARD) {
        return T::zero();
    }
    corr.norm_sqr() / (norm_sq * energy)
}

/// One transposed-form FIR branch with ±1 taps.
///
/// `state[i]` holds `Σ_{j>i} h_j u[m − (j − i − 1)]`, the partial sums a
/// direct-form window would produce for the taps above `i`.
#[derive(Debug, Clone)]
pub struct TransposedSubfilter<T> {
    taps: [T; SUBFILTER_TAPS],
    state: [Complex<T>; SUBFILTER_TAPS - 1],
}

impl<T: Real> TransposedSubfilter<T> {
    pub fn new(taps: [T; SUBFILTER_TAPS]) -> Self {
        TransposedSubfilter {
            taps,
            state: [Complex::new(T::zero(), T::zero()); SUBFILTER_TAPS - 1],
        }
    }

    #[inline]
    pub fn step(&mut self, u: Complex<T>) -> Complex<T> {
        let y = u * self.taps[0] + self.state[0];
        for i in 0..SUBFILTER_TAPS - 2 {
            self.state[i] = u * self.taps[i + 1] + self.state[i + 1];
        }
        self.state[SUBFILTER_TAPS - 2] = u * self.taps[SUBFILTER_TAPS - 1];
        y
    }

    pub fn state(&self) -> &[Complex<T>] {
        &self.state
    }

    pub fn taps(&self) -> &[T] {
        &self.taps
    }

    pub fn reset(&mut self) {
        self.state = [Complex::new(T::zero(), T::zero()); SUBFILTER_TAPS - 1];
    }
}

/// Correlator of one PPD: eight transposed branches summed.
#[derive(Debug, Clone)]
pub struct PpdCorrelator<T> {
    lag: usize,
    branches: Vec<TransposedSubfilter<T>>,
}

impl<T: Real> PpdCorrelator<T> {
    pub fn new(template: &TriggerTemplate, lag: usize) -> Self {
        assert!(lag < R);
        let branches = (0..R)
            .map(|l| {
                let mut taps = [T::zero(); SUBFILTER_TAPS];
                for (k, t) in taps.iter_mut().enumerate() {
                    *t = template.tap(R * k + l);
                }
                TransposedSubfilter::new(taps)
            })
            .collect();
        PpdCorrelator { lag, branches }
    }

    pub fn lag(&self) -> usize {
        self.lag
    }

    pub fn branches(&self) -> &[TransposedSubfilter<T>] {
        &self.branches
    }

    /// `C[8m + lag]` given the current and previous blocks.
    #[inline]
    fn step(&mut self, cur: &[Complex<T>; R], prev: &[Complex<T>; R]) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (l, br) in self.branches.iter_mut().enumerate() {
            let u = if l <= self.lag { cur[self.lag - l] } else { prev[R + self.lag - l] };
            acc += br.step(u);
        }
        acc
    }

    fn reset(&mut self) {
        self.branches.iter_mut().for_each(TransposedSubfilter::reset);
    }
}

/// The eight PPD correlators: one correlation output per sample position.
#[derive(Debug, Clone)]
pub struct PolyphaseCorrelator<T> {
    ppds: Vec<PpdCorrelator<T>>,
    prev: [Complex<T>; R],
}

impl<T: Real> PolyphaseCorrelator<T> {
    pub fn new(template: &TriggerTemplate) -> Self {
        PolyphaseCorrelator {
            ppds: (0..R).map(|lag| PpdCorrelator::new(template, lag)).collect(),
            prev: [Complex::new(T::zero(), T::zero()); R],
        }
    }

    /// Feeds one block; returns `C[n]` for each of its `R` sample positions.
    pub fn step(&mut self, block: &[Complex<T>; R]) -> [Complex<T>; R] {
        let mut out = [Complex::new(T::zero(), T::zero()); R];
        for (o, ppd) in out.iter_mut().zip(self.ppds.iter_mut()) {
            *o = ppd.step(block, &self.prev);
        }
        self.prev = *block;
        out
    }

    pub fn step_iq(&mut self, block: &IqBlock) -> [Complex<T>; R] {
        self.step(&raw_block(block))
    }

    pub fn ppd(&self, lag: usize) -> &PpdCorrelator<T> {
        &self.ppds[lag]
    }

    pub fn reset(&mut self) {
        self.ppds.iter_mut().for_each(PpdCorrelator::reset);
        self.prev = [Complex::new(T::zero(), T::zero()); R];
    }
}

fn raw_block<T: Real>(block: &IqBlock) -> [Complex<T>; R] {
    let mut out = [Complex::new(T::zero(), T::zero()); R];
    for (o, s) in out.iter_mut().zip(block.0.iter()) {
        *o = s.raw();
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub repetitions: usize,
    /// Sample spacing between consecutive crossings.
    pub spacing: usize,
    /// Crossing position tolerance in PPD evaluations (clocks).
    pub tolerance: usize,
    /// Samples after a declaration during which a PPD, and the bank
    /// trigger, stay quiet.
    pub holdoff: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            threshold: 0.25,
            repetitions: 4,
            spacing: TEMPLATE_LEN,
            tolerance: 0,
            holdoff: 512,
        }
    }
}

/// A PPD declaration.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionEvent {
    /// Absolute index of the sample at which the detection was declared.
    pub sample_index: u64,
    pub ppd_lag: usize,
    /// Metric at the crossings, oldest first.
    pub metric_values: Vec<f64>,
}

/// Crossing bookkeeping of one PPD on its own lag grid.
#[derive(Debug, Clone)]
struct CrossingTracker {
    lag: usize,
    /// bit j set: crossing `j` clocks ago
    history: u128,
    metrics: Vec<f64>,
    cursor: usize,
    holdoff_until: u64,
}

impl CrossingTracker {
    fn new(lag: usize, depth: usize) -> Self {
        CrossingTracker {
            lag,
            history: 0,
            metrics: vec![0.0; depth],
            cursor: 0,
            holdoff_until: 0,
        }
    }

    fn metric_ago(&self, clocks: usize) -> f64 {
        let d = self.metrics.len();
        self.metrics[(self.cursor + d - clocks % d) % d]
    }

    fn push(&mut self, m: f64, n: u64, cfg: &DetectorConfig) -> Option<DetectionEvent> {
        self.history = (self.history << 1) | u128::from(m > cfg.threshold);
        self.cursor = (self.cursor + 1) % self.metrics.len();
        self.metrics[self.cursor] = m;
        if self.history & 1 == 0 || n < self.holdoff_until {
            return None;
        }
        let stride = cfg.spacing / R;
        let mut ago = vec![0usize];
        for rep in 1..cfg.repetitions {
            let centre = rep * stride;
            let lo = centre.saturating_sub(cfg.tolerance);
            let hit = (lo..=centre + cfg.tolerance).find(|&j| self.history >> j & 1 == 1)?;
            ago.push(hit);
        }
        self.holdoff_until = n + cfg.holdoff as u64;
        Some(DetectionEvent {
            sample_index: n,
            ppd_lag: self.lag,
            metric_values: ago.iter().rev().map(|&j| self.metric_ago(j)).collect(),
        })
    }

    fn reset(&mut self) {
        self.history = 0;
        self.metrics.iter_mut().for_each(|m| *m = 0.0);
        self.holdoff_until = 0;
    }
}

/// Running `Σ|x|²` over the last 128 samples.
#[derive(Debug, Clone)]
struct EnergyWindow<T> {
    ring: Vec<T>,
    pos: usize,
    sum: T,
    since_refresh: usize,
}

impl<T: Real> EnergyWindow<T> {
    fn new() -> Self {
        EnergyWindow {
            ring: vec![T::zero(); TEMPLATE_LEN],
            pos: 0,
            sum: T::zero(),
            since_refresh: 0,
        }
    }

    #[inline]
    fn push(&mut self, x: Complex<T>) -> T {
        let e = x.norm_sqr();
        self.sum = self.sum + e - self.ring[self.pos];
        self.ring[self.pos] = e;
        self.pos = (self.pos + 1) % TEMPLATE_LEN;
        self.since_refresh += 1;
        if self.since_refresh >= 4096 {
            // bound the drift of the incremental sum
            self.sum = self.ring.iter().fold(T::zero(), |a, &b| a + b);
            self.since_refresh = 0;
        }
        self.sum.max(T::zero())
    }

    fn reset(&mut self) {
        self.ring.iter_mut().for_each(|v| *v = T::zero());
        self.sum = T::zero();
        self.pos = 0;
    }
}

/// Per-clock output of the bank.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BankOutput {
    /// `t_rx,w`: high for exactly this clock.
    pub trigger: bool,
    /// Declarations made this clock, lowest lag first.
    pub events: Vec<DetectionEvent>,
    pub n_detect: u64,
}

impl BankOutput {
    /// The declaration that raised the trigger, if any.
    pub fn winner(&self) -> Option<&DetectionEvent> {
        if self.trigger {
            self.events.first()
        } else {
            None
        }
    }
}

/// Eight PPDs on lags 0..7 behind the polyphase correlator.
#[derive(Debug, Clone)]
pub struct DetectorBank<T> {
    cfg: DetectorConfig,
    correlator: PolyphaseCorrelator<T>,
    energy: EnergyWindow<T>,
    trackers: Vec<CrossingTracker>,
    norm_sq: T,
    samples: u64,
    quiet_samples: u64,
    trigger_holdoff_until: u64,
    n_detect: u64,
}

impl<T: Real> DetectorBank<T> {
    pub fn new(template: &TriggerTemplate) -> Self {
        Self::with_config(template, DetectorConfig::default())
    }

    pub fn with_config(template: &TriggerTemplate, cfg: DetectorConfig) -> Self {
        let depth = (cfg.repetitions - 1) * cfg.spacing / R + cfg.tolerance + 1;
        assert!(depth <= 128, "crossing history exceeds 128 clocks");
        DetectorBank {
            correlator: PolyphaseCorrelator::new(template),
            energy: EnergyWindow::new(),
            trackers: (0..R).map(|lag| CrossingTracker::new(lag, depth)).collect(),
            norm_sq: T::lit(template.norm_sq as f64),
            samples: 0,
            quiet_samples: 0,
            trigger_holdoff_until: 0,
            n_detect: 0,
            cfg,
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// `N_detect`: declarations made by PPD 0.
    pub fn n_detect(&self) -> u64 {
        self.n_detect
    }

    /// Samples consumed so far.
    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn step(&mut self, block: &IqBlock) -> BankOutput {
        if block.is_zero() && self.quiet_samples >= (TEMPLATE_LEN + R) as u64 {
            // all delay lines and the energy window already hold zeros
            return self.step_quiet();
        }
        self.step_complex(&raw_block(block))
    }

    /// Feeds one block of complex samples in raw LSB units.
    pub fn step_complex(&mut self, block: &[Complex<T>; R]) -> BankOutput {
        let corr = self.correlator.step(block);
        let zero = Complex::new(T::zero(), T::zero());
        if block.iter().all(|x| *x == zero) {
            self.quiet_samples += R as u64;
        } else {
            self.quiet_samples = 0;
        }
        let mut out = BankOutput::default();
        for lag in 0..R {
            let energy = self.energy.push(block[lag]);
            let n = self.samples + lag as u64;
            let m = metric(corr[lag], energy, self.norm_sq).to_f64_lossy();
            if let Some(ev) = self.trackers[lag].push(m, n, &self.cfg) {
                out.events.push(ev);
            }
        }
        self.finish_clock(out)
    }

    fn step_quiet(&mut self) -> BankOutput {
        self.quiet_samples += R as u64;
        let mut out = BankOutput::default();
        for lag in 0..R {
            let n = self.samples + lag as u64;
            if let Some(ev) = self.trackers[lag].push(0.0, n, &self.cfg) {
                out.events.push(ev);
            }
        }
        self.finish_clock(out)
    }

    fn finish_clock(&mut self, mut out: BankOutput) -> BankOutput {
        if out.events.iter().any(|e| e.ppd_lag == 0) {
            self.n_detect += 1;
        }
        if let Some(first) = out.events.first() {
            if first.sample_index >= self.trigger_holdoff_until {
                out.trigger = true;
                self.trigger_holdoff_until = first.sample_index + self.cfg.holdoff as u64;
            }
        }
        self.samples += R as u64;
        out.n_detect = self.n_detect;
        out
    }

    pub fn reset(&mut self) {
        self.correlator.reset();
        self.energy.reset();
        self.trackers.iter_mut().for_each(CrossingTracker::reset);
        self.samples = 0;
        self.quiet_samples = 0;
        self.trigger_holdoff_until = 0;
        self.n_detect = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airframe::{make_golay, make_template};

    fn template() -> TriggerTemplate {
        make_template(&make_golay(32).unwrap()).unwrap()
    }

    fn feed(samples: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let mut c = PolyphaseCorrelator::<f64>::new(&template());
        let mut out = Vec::new();
        for chunk in samples.chunks(R) {
            let mut b = [Complex::new(0.0, 0.0); R];
            b[..chunk.len()].copy_from_slice(chunk);
            out.extend_from_slice(&c.step(&b));
        }
        out
    }

    #[test]
    fn impulse_reproduces_taps() {
        let t = template();
        let mut x = vec![Complex::new(0.0, 0.0); 256];
        x[0] = Complex::new(1.0, 0.0);
        let c = feed(&x);
        for n in 0..128 {
            assert_eq!(c[n].re, t.b[n] as f64, "n={n}");
        }
        assert!(c[128..].iter().all(|v| v.re == 0.0));
    }

    #[test]
    fn matched_peak_is_norm() {
        // x[n−k] = b[k] at n = 127 requires x[m] = b[127 − m]
        let t = template();
        let x: Vec<Complex<f64>> = (0..128).map(|m| Complex::new(t.b[127 - m] as f64, 0.0)).collect();
        assert_eq!(feed(&x)[127].re, 128.0);
    }

    #[test]
    fn metric_bounds() {
        let b = template();
        let x: Vec<f64> = (0..128).map(|k| 3.0 * b.b[k] as f64).collect();
        let corr: f64 = x.iter().zip(b.b.iter()).map(|(a, t)| a * *t as f64).sum();
        let e: f64 = x.iter().map(|v| v * v).sum();
        assert!((metric(Complex::new(corr, 0.0), e, 128.0) - 1.0).abs() < 1e-15);
        assert_eq!(metric(Complex::new(0.0, 0.0), e, 128.0), 0.0);
        assert_eq!(metric(Complex::new(5.0, 0.0), 100.0, 128.0), 0.0);
    }

    #[test]
    fn transposed_state_matches_partial_sums() {
        let taps: [f64; 16] = std::array::from_fn(|k| if k % 3 == 0 { -1.0 } else { 1.0 });
        let mut f = TransposedSubfilter::new(taps);
        let u: Vec<Complex<f64>> = (0..40).map(|k| Complex::new(k as f64 - 7.0, 2.0 * k as f64)).collect();
        for m in 0..u.len() {
            f.step(u[m]);
            for i in 0..15 {
                let mut expect = Complex::new(0.0, 0.0);
                for j in (i + 1)..16 {
                    let back = j - i - 1;
                    if m >= back {
                        expect += u[m - back] * taps[j];
                    }
                }
                assert_eq!(f.state()[i], expect, "m={m} i={i}");
            }
        }
    }
}
