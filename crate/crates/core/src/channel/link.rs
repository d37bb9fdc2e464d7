use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::codebook::Awv;
use super::scene::ChannelScene;
use crate::dsp::{quantize, IqBlock, IqSample, R};
use crate::Result;

/// Net complex gain and delay of one path for a pair of AWVs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub delay: usize,
    pub gain: Complex<f64>,
}

/// Path taps for the given AWVs, TX carrier `scene.carrier_hz`.
pub fn path_taps(scene: &ChannelScene, tx_awv: &Awv, rx_awv: &Awv) -> Vec<Tap> {
    let fc = scene.carrier_hz;
    let common_db = scene.link_gain_db + scene.tx_gain_db + scene.rx_gain_db - scene.fspl_db();
    scene
        .paths
        .iter()
        .map(|p| {
            let amp = 10f64.powf((common_db + p.gain_db) / 20.0);
            Tap {
                delay: p.delay_samples,
                gain: tx_awv.gain(p.azimuth_tx_deg, fc) * rx_awv.gain(p.azimuth_rx_deg, fc) * amp,
            }
        })
        .collect()
}

/// Per-transmission settings of a [`Link`].
#[derive(Debug, Clone, Copy)]
pub struct LinkSettings<'a> {
    pub tx_awv: &'a Awv,
    pub rx_awv: &'a Awv,
    pub tx_carrier_hz: f64,
    pub rx_carrier_hz: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
}

/// Streaming one-way link from a transmitter DAC to a receiver ADC.
#[derive(Debug, Clone)]
pub struct Link {
    scene: ChannelScene,
    taps: Vec<Tap>,
    history: VecDeque<Complex<f64>>,
    /// Non-zero entries currently held in `history`.
    live: usize,
    cfo_hz: f64,
    n: u64,
    rng: ChaCha8Rng,
    clipped: u64,
}

impl Link {
    pub fn new(scene: &ChannelScene, tx_awv: &Awv, rx_awv: &Awv) -> Result<Self> {
        scene.validate()?;
        let depth = scene.paths.iter().map(|p| p.delay_samples).max().unwrap_or(0) + 1;
        Ok(Link {
            taps: path_taps(scene, tx_awv, rx_awv),
            history: VecDeque::from(vec![Complex::new(0.0, 0.0); depth]),
            live: 0,
            cfo_hz: scene.cfo_hz,
            n: 0,
            rng: ChaCha8Rng::seed_from_u64(scene.seed),
            clipped: 0,
            scene: scene.clone(),
        })
    }

    pub fn scene(&self) -> &ChannelScene {
        &self.scene
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Samples with at least one clamped component so far.
    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    pub fn set_awvs(&mut self, tx_awv: &Awv, rx_awv: &Awv) {
        self.taps = path_taps(&self.scene, tx_awv, rx_awv);
    }

    /// Applies new beam, carrier and gain settings while keeping the
    /// delay line, sample counter and noise stream.
    pub fn retune(&mut self, s: &LinkSettings<'_>) -> Result<()> {
        let mut scene = self.scene.clone();
        scene.carrier_hz = s.tx_carrier_hz;
        scene.tx_gain_db = s.tx_gain_db;
        scene.rx_gain_db = s.rx_gain_db;
        scene.validate()?;
        self.scene = scene;
        self.set_rx_carrier(s.rx_carrier_hz, s.tx_awv, s.rx_awv);
        Ok(())
    }

    /// Accounts for a receiver tuned to `rx_carrier_hz`: the difference adds
    /// to the CFO, and a difference beyond the Nyquist band blocks the link.
    pub fn set_rx_carrier(&mut self, rx_carrier_hz: f64, tx_awv: &Awv, rx_awv: &Awv) {
        let offset = self.scene.carrier_hz - rx_carrier_hz;
        self.cfo_hz = self.scene.cfo_hz + offset;
        if offset.abs() > self.scene.f_sample / 2.0 {
            self.taps.iter_mut().for_each(|t| t.gain = Complex::new(0.0, 0.0));
        } else {
            self.set_awvs(tx_awv, rx_awv);
        }
    }

    fn sample(&mut self, x: Complex<f64>) -> Complex<f64> {
        let zero = Complex::new(0.0, 0.0);
        if let Some(old) = self.history.pop_back() {
            if old != zero {
                self.live -= 1;
            }
        }
        if x != zero {
            self.live += 1;
        }
        self.history.push_front(x);
        let mut y = zero;
        if self.live > 0 {
            for t in &self.taps {
                y += self.history[t.delay] * t.gain;
            }
            if self.cfo_hz != 0.0 {
                let ph = 2.0 * PI * self.cfo_hz * (self.n as f64 / self.scene.f_sample);
                y *= Complex::from_polar(1.0, ph);
            }
        }
        if self.scene.noise_psd > 0.0 {
            let s = (self.scene.noise_psd / 2.0).sqrt();
            let re: f64 = self.rng.sample(StandardNormal);
            let im: f64 = self.rng.sample(StandardNormal);
            y += Complex::new(re * s, im * s);
        }
        self.n += 1;
        y
    }

    /// Unit-scale received samples before clipping and quantization.
    pub fn process(&mut self, tx: &[Complex<f64>]) -> Vec<Complex<f64>> {
        tx.iter().map(|&x| self.sample(x)).collect()
    }

    fn to_adc(&mut self, y: &[Complex<f64>]) -> Vec<IqSample> {
        let c = self.scene.rx_clip;
        let clamped: Vec<Complex<f64>> =
            y.iter().map(|v| Complex::new(v.re.clamp(-c, c), v.im.clamp(-c, c))).collect();
        let q = quantize(&clamped);
        let extra = y.iter().filter(|v| v.re.abs() > c || v.im.abs() > c).count();
        self.clipped += extra.max(q.clipped) as u64;
        q.samples
    }

    /// One PL clock worth of samples.
    pub fn push_block(&mut self, tx: &IqBlock) -> IqBlock {
        let x: [Complex<f64>; R] = std::array::from_fn(|j| tx.0[j].to_complex());
        let zero = Complex::new(0.0, 0.0);
        if self.live == 0 && x.iter().all(|v| *v == zero) && self.scene.noise_psd == 0.0 {
            self.n += R as u64;
            return IqBlock::ZERO;
        }
        let y = self.process(&x);
        let s = self.to_adc(&y);
        IqBlock(std::array::from_fn(|j| s[j]))
    }

    /// Batch form over a sample stream.
    pub fn run(&mut self, tx: &[IqSample]) -> Vec<IqSample> {
        let x: Vec<Complex<f64>> = tx.iter().map(|s| s.to_complex()).collect();
        let y = self.process(&x);
        self.to_adc(&y)
    }
}

/// `rx[n] = Σ_p g_p tx[n − d_p] e^{j2π cfo n / f_s} + w[n]`, clipped and
/// quantized to 16 bits.
pub fn propagate(tx: &[IqSample], tx_awv: &Awv, rx_awv: &Awv, scene: &ChannelScene) -> Result<Vec<IqSample>> {
    Ok(Link::new(scene, tx_awv, rx_awv)?.run(tx))
}
