//! Four-symbol OFDM PPDU announcing a TX AWV index.
//!
//! Symbol roles: 0 sync pilot, 1 channel estimation, 2 header (6-bit index
//! and CRC-8, BPSK, repetition 3, remaining subcarriers known pilots),
//! 3 payload (header bits again, QPSK, cyclically repeated).

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::crc8;
use crate::{Error, Real, Result};

/// Fraction of railed PPDU samples above which the receiver reports
/// saturation instead of attempting a decode.
pub const SATURATION_FRACTION: f64 = 0.01;

const INDEX_BITS: usize = 6;
const HEADER_BITS: usize = INDEX_BITS + 8;
const HEADER_REPEAT: usize = 3;
const CE: usize = 1;
const HEADER: usize = 2;
const SNR_CAP_DB: f64 = 200.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PpduConfig {
    pub fft_size: usize,
    pub cp_len: usize,
    pub n_symbols: usize,
    /// Occupied subcarriers per side.
    pub occupied_per_side: usize,
    /// Lowest occupied |subcarrier index|; DC and ±1 below it stay null.
    pub first_occupied: usize,
    /// Time-domain RMS of the transmitted PPDU, unit scale.
    pub rms: f64,
    /// Timing search half-width in samples.
    pub search: usize,
}

impl Default for PpduConfig {
    fn default() -> Self {
        PpduConfig {
            fft_size: 256,
            cp_len: 64,
            n_symbols: 4,
            occupied_per_side: 90,
            first_occupied: 2,
            rms: 0.2,
            search: 16,
        }
    }
}

impl PpduConfig {
    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    pub fn len(&self) -> usize {
        self.n_symbols * self.symbol_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn occupied(&self) -> usize {
        2 * self.occupied_per_side
    }

    /// Subcarrier indices in ascending order (negative side first).
    pub fn subcarriers(&self) -> Vec<isize> {
        let lo = self.first_occupied as isize;
        let hi = lo + self.occupied_per_side as isize;
        (-hi + 1..=-lo).chain(lo..hi).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_symbols != 4 {
            return Err(Error::param("the PPDU has exactly 4 symbols"));
        }
        if self.first_occupied < 1 || self.first_occupied + self.occupied_per_side > self.fft_size / 2 {
            return Err(Error::param("occupied subcarriers do not fit the FFT"));
        }
        if self.occupied() < HEADER_BITS * HEADER_REPEAT {
            return Err(Error::param("too few subcarriers for the header"));
        }
        if self.cp_len >= self.fft_size || !(self.rms > 0.0) {
            return Err(Error::param("bad cyclic prefix or RMS"));
        }
        Ok(())
    }
}

/// Why a PPDU was not decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeFailure {
    /// Header CRC mismatch.
    Crc,
    /// Too many samples on the converter rails.
    Saturated,
    /// No energy on the occupied subcarriers.
    NoSignal,
}

/// Result of [`decode_ppdu`]. CFR and CIR are reported even when the
/// header does not decode.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMeasurement<T> {
    pub tx_awv_index: Option<u8>,
    pub snr_db: Option<f64>,
    /// Per occupied subcarrier, ascending subcarrier index.
    pub cfr: Vec<Complex<T>>,
    /// Inverse FFT of the CFR, zero-filled at null subcarriers.
    pub cir: Vec<Complex<T>>,
    /// PPDU start relative to the first input sample.
    pub timing_offset: isize,
    pub clipped_fraction: f64,
    pub failure: Option<DecodeFailure>,
}

impl<T> LinkMeasurement<T> {
    pub fn decode_ok(&self) -> bool {
        self.tx_awv_index.is_some()
    }
}

/// Encoder/decoder with cached FFT plans and reference symbols.
pub struct PpduModem<T: Real> {
    cfg: PpduConfig,
    bins: Vec<usize>,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
    sync: Vec<Complex<T>>,
    ce: Vec<Complex<T>>,
    pad: Vec<Complex<T>>,
    scrambler: Vec<Complex<T>>,
    scale: T,
    sync_td: Vec<Complex<T>>,
}

fn pn_bits(n: usize) -> Vec<u8> {
    // x^9 + x^5 + 1, all-ones seed
    let mut state: u16 = 0x1FF;
    (0..n)
        .map(|_| {
            let bit = ((state >> 8) ^ (state >> 4)) & 1;
            state = ((state << 1) | bit) & 0x1FF;
            bit as u8
        })
        .collect()
}

fn bpsk<T: Real>(bit: u8) -> Complex<T> {
    Complex::new(if bit == 0 { T::one() } else { -T::one() }, T::zero())
}

fn header_bits(index: u8) -> [u8; HEADER_BITS] {
    let crc = crc8(&[index]);
    let mut bits = [0u8; HEADER_BITS];
    for k in 0..INDEX_BITS {
        bits[k] = (index >> (INDEX_BITS - 1 - k)) & 1;
    }
    for k in 0..8 {
        bits[INDEX_BITS + k] = (crc >> (7 - k)) & 1;
    }
    bits
}

impl<T: Real> PpduModem<T> {
    pub fn new(cfg: PpduConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.fft_size;
        let bins = cfg
            .subcarriers()
            .iter()
            .map(|&k| k.rem_euclid(n as isize) as usize)
            .collect();
        let mut planner = FftPlanner::new();
        let occ = cfg.occupied();
        let pn = pn_bits(4 * occ);
        let sync = pn[..occ].iter().map(|&b| bpsk(b)).collect();
        let ce = pn[occ..2 * occ].iter().map(|&b| bpsk(b)).collect();
        let pad = pn[2 * occ..3 * occ].iter().map(|&b| bpsk(b)).collect();
        let scrambler = pn[3 * occ..].iter().map(|&b| bpsk(b)).collect();
        let scale = T::lit(cfg.rms / (occ as f64).sqrt());
        let mut modem = PpduModem {
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
            cfg,
            bins,
            sync,
            ce,
            pad,
            scrambler,
            scale,
            sync_td: Vec::new(),
        };
        modem.sync_td = modem.modulate(&modem.sync.clone());
        Ok(modem)
    }

    pub fn config(&self) -> &PpduConfig {
        &self.cfg
    }

    /// One symbol with cyclic prefix from its occupied-subcarrier values.
    fn modulate(&self, slots: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.cfg.fft_size;
        let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
        for (&bin, &v) in self.bins.iter().zip(slots) {
            buf[bin] = v;
        }
        self.ifft.process(&mut buf);
        for v in buf.iter_mut() {
            *v *= self.scale;
        }
        let mut out = buf[n - self.cfg.cp_len..].to_vec();
        out.extend_from_slice(&buf);
        out
    }

    fn header_slots(&self, bits: &[u8; HEADER_BITS]) -> Vec<Complex<T>> {
        let occ = self.cfg.occupied();
        let stride = occ / HEADER_REPEAT;
        let mut slots = vec![Complex::new(T::zero(), T::zero()); occ];
        let mut used = vec![false; occ];
        for r in 0..HEADER_REPEAT {
            for (j, &b) in bits.iter().enumerate() {
                slots[r * stride + j] = bpsk(b);
                used[r * stride + j] = true;
            }
        }
        let mut pad = self.pad.iter();
        for (s, u) in slots.iter_mut().zip(&used) {
            if !u {
                *s = *pad.next().expect("pad sequence covers the free slots");
            }
        }
        slots
    }

    fn payload_slots(&self, bits: &[u8; HEADER_BITS]) -> Vec<Complex<T>> {
        let h = T::lit(std::f64::consts::FRAC_1_SQRT_2);
        let sym: Vec<Complex<T>> = bits
            .chunks(2)
            .map(|p| {
                let re = if p[0] == 0 { h } else { -h };
                let im = if p[1] == 0 { h } else { -h };
                Complex::new(re, im)
            })
            .collect();
        // scrambled so the repetition does not form a comb (impulse train)
        (0..self.cfg.occupied()).map(|s| sym[s % sym.len()] * self.scrambler[s].re).collect()
    }

    fn reference(&self, index: u8) -> [Vec<Complex<T>>; 4] {
        let bits = header_bits(index);
        [
            self.sync.clone(),
            self.ce.clone(),
            self.header_slots(&bits),
            self.payload_slots(&bits),
        ]
    }

    /// Encodes `awv_index` (0..=63) into exactly `cfg.len()` samples.
    pub fn encode(&self, awv_index: u8) -> Result<Vec<Complex<T>>> {
        if awv_index as usize >= 1 << INDEX_BITS {
            return Err(Error::param(format!("AWV index {awv_index} out of range 0..=63")));
        }
        Ok(self
            .reference(awv_index)
            .iter()
            .flat_map(|slots| self.modulate(slots))
            .collect())
    }

    /// Coarse PPDU start in `rx`: the lag with the largest energy-normalised
    /// correlation against the sync symbol. `None` if no full PPDU fits.
    pub fn locate(&self, rx: &[Complex<T>]) -> Option<usize> {
        let len = self.cfg.len();
        if rx.len() < len {
            return None;
        }
        let w = self.sync_td.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut best: Option<(usize, f64)> = None;
        for o in 0..=rx.len() - len {
            let win = &rx[o..o + w];
            let c = self.sync_td.iter().zip(win).map(|(s, r)| s.conj() * r).fold(zero, |a, b| a + b);
            let e: T = win.iter().map(|v| v.norm_sqr()).fold(T::zero(), |a, b| a + b);
            if e <= T::zero() {
                continue;
            }
            let m = (c.norm_sqr() / e).to_f64_lossy();
            if best.is_none_or(|(_, b)| m > b) {
                best = Some((o, m));
            }
        }
        best.map(|(o, _)| o)
    }

    /// Decodes a PPDU expected to start within `±cfg.search` samples of
    /// `rx[0]`.
    pub fn decode(&self, rx: &[Complex<T>]) -> Result<LinkMeasurement<T>> {
        let cfg = &self.cfg;
        let len = cfg.len();
        if rx.len() < len {
            return Err(Error::param(format!("need {len} samples, got {}", rx.len())));
        }
        let zero = Complex::new(T::zero(), T::zero());
        let search = cfg.search;
        let mut buf = vec![zero; search];
        buf.extend_from_slice(rx);
        buf.resize(search + rx.len().max(len) + search, zero);

        // fine timing on the sync symbol
        let mut best = (0usize, T::zero());
        for o in 0..=2 * search {
            let c: Complex<T> = self
                .sync_td
                .iter()
                .zip(&buf[o..])
                .map(|(s, r)| s.conj() * r)
                .fold(zero, |a, b| a + b);
            let p = c.norm_sqr();
            if p > best.1 {
                best = (o, p);
            }
        }
        let start = best.0;
        let span = &buf[start..start + len];

        let rail = T::lit(32767.0 / 32768.0);
        let railed = span
            .iter()
            .filter(|c| c.re >= rail || c.re <= -T::one() || c.im >= rail || c.im <= -T::one())
            .count();
        let clipped_fraction = railed as f64 / len as f64;

        let n = cfg.fft_size;
        let sym_len = cfg.symbol_len();
        let ref_gain = self.scale * T::lit(n as f64);
        let y: Vec<Vec<Complex<T>>> = (0..cfg.n_symbols)
            .map(|s| {
                let body = s * sym_len + cfg.cp_len;
                let mut f = span[body..body + n].to_vec();
                self.fft.process(&mut f);
                self.bins.iter().map(|&b| f[b] / ref_gain).collect()
            })
            .collect();

        let cfr: Vec<Complex<T>> = y[CE].iter().zip(&self.ce).map(|(y, x)| y * x.conj()).collect();
        let mut cir = vec![zero; n];
        for (&bin, &h) in self.bins.iter().zip(&cfr) {
            cir[bin] = h;
        }
        self.ifft.process(&mut cir);
        let inv_n = T::lit(1.0 / n as f64);
        for v in cir.iter_mut() {
            *v *= inv_n;
        }

        let mut meas = LinkMeasurement {
            tx_awv_index: None,
            snr_db: None,
            cfr,
            cir,
            timing_offset: start as isize - search as isize,
            clipped_fraction,
            failure: None,
        };
        if clipped_fraction > SATURATION_FRACTION {
            meas.failure = Some(DecodeFailure::Saturated);
            return Ok(meas);
        }
        if meas.cfr.iter().all(|h| h.norm_sqr() == T::zero()) {
            meas.failure = Some(DecodeFailure::NoSignal);
            return Ok(meas);
        }

        // maximum-ratio combine the header repetitions
        let stride = cfg.occupied() / HEADER_REPEAT;
        let mut bits = [0u8; HEADER_BITS];
        for (j, bit) in bits.iter_mut().enumerate() {
            let soft = (0..HEADER_REPEAT)
                .map(|r| {
                    let s = r * stride + j;
                    (meas.cfr[s].conj() * y[HEADER][s]).re
                })
                .fold(T::zero(), |a, b| a + b);
            *bit = u8::from(soft < T::zero());
        }
        let index = bits[..INDEX_BITS].iter().fold(0u8, |a, &b| (a << 1) | b);
        let crc = bits[INDEX_BITS..].iter().fold(0u8, |a, &b| (a << 1) | b);
        if crc8(&[index]) != crc {
            meas.failure = Some(DecodeFailure::Crc);
            return Ok(meas);
        }
        meas.tx_awv_index = Some(index);
        meas.snr_db = Some(self.estimate_snr(&y, index));
        Ok(meas)
    }

    /// Re-encodes the frame and measures the error vector against a joint
    /// least-squares channel estimate over all four symbols. The result is
    /// referenced to the full sample bandwidth, i.e. mean PPDU sample power
    /// over per-sample noise power.
    fn estimate_snr(&self, y: &[Vec<Complex<T>>], index: u8) -> f64 {
        let refs = self.reference(index);
        let occ = self.cfg.occupied();
        let ns = self.cfg.n_symbols;
        let mut resid = 0.0;
        let mut power = 0.0;
        for s in 0..occ {
            let h = (0..ns)
                .map(|m| y[m][s] * refs[m][s].conj() / refs[m][s].norm_sqr())
                .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b)
                / T::lit(ns as f64);
            for m in 0..ns {
                resid += (y[m][s] - h * refs[m][s]).norm_sqr().to_f64_lossy();
            }
            power += h.norm_sqr().to_f64_lossy();
        }
        // per-slot noise variance in the normalized (H = y / x) domain
        let noise = resid / (occ * (ns - 1)) as f64;
        let signal = (power - occ as f64 * noise / ns as f64).max(0.0);
        // time-domain power is scale² Σ|H|², time-domain noise is
        // scale² · N · (slot noise)
        let snr = signal / (self.cfg.fft_size as f64 * noise).max(f64::MIN_POSITIVE);
        (10.0 * snr.max(1e-30).log10()).min(SNR_CAP_DB)
    }
}

pub fn encode_ppdu<T: Real>(awv_index: u8, cfg: &PpduConfig) -> Result<Vec<Complex<T>>> {
    PpduModem::new(cfg.clone())?.encode(awv_index)
}

pub fn decode_ppdu<T: Real>(rx: &[Complex<T>], cfg: &PpduConfig) -> Result<LinkMeasurement<T>> {
    PpduModem::new(cfg.clone())?.decode(rx)
}
