//! Clock-stepped model of the PL dataflow of one node.
//!
//! Each [`PlSim::clock_step`] consumes one ADC block and produces one DAC
//! block. Within a clock the order is: DAC drain, ADC capture, detector,
//! trigger arbitration. A trigger raised on clock `k` starts a capture with
//! the block of clock `k + 1`, as does a `t_rx_s` edge written between
//! clocks `k` and `k + 1`.

mod fifo;
mod registers;
mod script;

pub use fifo::{AxiFifo, FIFO_DEPTH};
pub use registers::{Edge, MonitorRegisters, RxMode, REGISTER_NAMES};
pub use script::{RegisterScript, ScriptEntry};

use crate::airframe::{make_golay, make_template, GOLAY_LEN};
use crate::detector::{BankOutput, DetectorBank, DetectorConfig};
use crate::dsp::{IqBlock, IqSample, R};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PlConfig {
    pub fifo_depth: usize,
    pub detector: DetectorConfig,
}

impl Default for PlConfig {
    fn default() -> Self {
        PlConfig { fifo_depth: FIFO_DEPTH, detector: DetectorConfig::default() }
    }
}

/// One completed capture as read from the ADC FIFO.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransferRecord {
    pub samples: Vec<IqSample>,
    pub mlast_index: usize,
}

/// Result of [`PlSim::tx_submit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxHandle {
    pub samples: usize,
    pub padding: usize,
    pub l_tx: usize,
}

/// Counters for the sample-conservation check. All sample counts refer to
/// capture requests (`L_rx · R` samples each).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlStats {
    pub triggers: u64,
    /// Capture requests not refused as busy, accepted or not.
    pub offered_samples: u64,
    /// WTR capture requests refused because `D_adc_I ≥ D_th`.
    pub backpressure_drops: u64,
    pub dropped_samples: u64,
    /// Capture requests that arrived during an active or pending capture.
    pub busy_drops: u64,
    pub captured_samples: u64,
    pub read_samples: u64,
    /// Samples discarded by a flush or an `r_trans` strobe.
    pub flushed_samples: u64,
    pub tx_blocks: u64,
}

#[derive(Debug, Clone, Copy)]
struct Capture {
    remaining: u64,
}

#[derive(Debug, Clone)]
pub struct PlSim {
    cfg: PlConfig,
    regs: MonitorRegisters,
    dac: AxiFifo,
    adc: AxiFifo,
    detector: DetectorBank<f64>,
    tx_remaining: u64,
    capture: Option<Capture>,
    capture_pending: Option<u64>,
    s_rx: usize,
    clock: u64,
    stats: PlStats,
    last: BankOutput,
}

impl PlSim {
    pub fn new(cfg: PlConfig) -> Result<Self> {
        if cfg.fifo_depth == 0 {
            return Err(Error::param("FIFO depth must be positive"));
        }
        let template = make_template(&make_golay(GOLAY_LEN)?)?;
        let mut regs = MonitorRegisters::default();
        regs.d_th = cfg.fifo_depth as u64;
        Ok(PlSim {
            detector: DetectorBank::with_config(&template, cfg.detector.clone()),
            dac: AxiFifo::new(cfg.fifo_depth),
            adc: AxiFifo::new(cfg.fifo_depth),
            regs,
            tx_remaining: 0,
            capture: None,
            capture_pending: None,
            s_rx: R,
            clock: 0,
            stats: PlStats::default(),
            last: BankOutput::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &PlConfig {
        &self.cfg
    }

    pub fn registers(&self) -> &MonitorRegisters {
        &self.regs
    }

    pub fn stats(&self) -> &PlStats {
        &self.stats
    }

    pub fn adc_fifo(&self) -> &AxiFifo {
        &self.adc
    }

    pub fn dac_fifo(&self) -> &AxiFifo {
        &self.dac
    }

    pub fn detector(&self) -> &DetectorBank<f64> {
        &self.detector
    }

    /// Bank output of the most recent clock.
    pub fn last_bank_output(&self) -> &BankOutput {
        &self.last
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn n_trans(&self) -> u64 {
        self.regs.n_trans
    }

    pub fn tx_active(&self) -> bool {
        self.tx_remaining > 0
    }

    pub fn capture_active(&self) -> bool {
        self.capture.is_some() || self.capture_pending.is_some()
    }

    /// Samples per transfer delivered by [`PlSim::take_transfer`].
    pub fn s_rx(&self) -> usize {
        self.s_rx
    }

    pub fn reg_read(&self, name: &str) -> Result<u64> {
        self.regs.read(name)
    }

    pub fn reg_write(&mut self, name: &str, value: u64) -> Result<()> {
        match self.regs.write(name, value, self.cfg.fifo_depth)? {
            Some(Edge::TxStart) => {
                if self.tx_remaining == 0 {
                    self.tx_remaining = self.regs.l_tx;
                }
            }
            Some(Edge::RxStart) => {
                if self.regs.e_rx == 1 {
                    self.request_capture();
                }
            }
            Some(Edge::ResetTransfers) => self.reset_transfers_now(),
            None => {}
        }
        Ok(())
    }

    fn pulse(&mut self, name: &str) -> Result<()> {
        self.reg_write(name, 0)?;
        self.reg_write(name, 1)
    }

    pub fn set_rx_enabled(&mut self, on: bool) -> Result<()> {
        self.reg_write("e_rx", u64::from(on))
    }

    pub fn set_rx_mode(&mut self, mode: RxMode) -> Result<()> {
        self.reg_write("m_rx", mode as u64)
    }

    /// Strobes `r_trans`: resets `N_trans`, flushes the ADC FIFO and cancels
    /// any capture in progress.
    pub fn reset_transfers(&mut self) -> Result<()> {
        self.pulse("r_trans")
    }

    fn reset_transfers_now(&mut self) {
        self.stats.flushed_samples += (self.adc.occupancy() * R) as u64;
        if let Some(c) = self.capture {
            self.stats.flushed_samples += c.remaining * R as u64;
        }
        if let Some(l) = self.capture_pending {
            self.stats.flushed_samples += l * R as u64;
        }
        self.adc.flush();
        self.capture = None;
        self.capture_pending = None;
        self.regs.n_trans = 0;
        self.regs.d_adc_i = 0;
    }

    /// Pads to a multiple of `R`, loads the DAC FIFO and raises `t_tx`.
    pub fn tx_submit(&mut self, iq: &[IqSample]) -> Result<TxHandle> {
        if self.tx_active() || !self.dac.is_empty() {
            return Err(Error::Busy);
        }
        let limit = self.cfg.fifo_depth * R;
        if iq.len() > limit {
            return Err(Error::Capacity { requested: iq.len(), limit });
        }
        if iq.is_empty() {
            return Err(Error::param("empty transmission"));
        }
        let blocks = IqBlock::pack(iq);
        let n = blocks.len();
        for (k, b) in blocks.into_iter().enumerate() {
            self.dac.push(b, k + 1 == n);
        }
        self.reg_write("L_tx", n as u64)?;
        self.pulse("t_tx")?;
        Ok(TxHandle { samples: iq.len(), padding: n * R - iq.len(), l_tx: n })
    }

    /// Arms a software-triggered capture of `s_rx` samples starting with the
    /// next clock.
    pub fn str_arm(&mut self, s_rx: usize) -> Result<()> {
        if self.regs.e_rx != 1 {
            return Err(Error::NotEnabled);
        }
        if self.regs.m_rx != 0 {
            return Err(Error::param("software-triggered reception requires m_rx=0"));
        }
        self.arm(s_rx)
    }

    /// PS-forced capture of the configured `L_rx` blocks (`t_rx_s` edge).
    /// Under WTR the request is subject to the same `D_th` check as a
    /// waveform trigger.
    pub fn force_trigger(&mut self) -> Result<()> {
        if self.regs.e_rx != 1 {
            return Err(Error::NotEnabled);
        }
        if self.capture_active() {
            return Err(Error::Busy);
        }
        self.pulse("t_rx_s")
    }

    fn arm(&mut self, s_rx: usize) -> Result<()> {
        let limit = self.cfg.fifo_depth * R;
        if s_rx > limit {
            return Err(Error::Capacity { requested: s_rx, limit });
        }
        if s_rx == 0 {
            return Err(Error::param("S_rx must be positive"));
        }
        if self.capture_active() {
            return Err(Error::Busy);
        }
        self.reg_write("L_rx", s_rx.div_ceil(R) as u64)?;
        self.s_rx = s_rx;
        self.pulse("t_rx_s")
    }

    /// Captures `s_rx` samples pulled from `source`, one block per clock.
    /// Any DAC output produced meanwhile is discarded.
    pub fn str_receive(&mut self, s_rx: usize, mut source: impl FnMut() -> IqBlock) -> Result<Vec<IqSample>> {
        let before = self.regs.n_trans;
        self.str_arm(s_rx)?;
        while self.regs.n_trans == before {
            let b = source();
            self.clock_step(&b);
        }
        Ok(self.take_transfer().expect("capture completed").samples)
    }

    /// Oldest completed transfer, trimmed to the configured `S_rx`.
    pub fn take_transfer(&mut self) -> Option<TransferRecord> {
        if self.regs.n_trans == 0 {
            return None;
        }
        let mut rec = self.pop_record();
        if rec.samples.len() > self.s_rx {
            rec.samples.truncate(self.s_rx);
            rec.mlast_index = self.s_rx - 1;
        }
        Some(rec)
    }

    /// Sets `L_rx` and `D_th = L_rx · ⌊depth / L_rx⌋`, resets `N_trans` and
    /// flushes the ADC FIFO.
    pub fn wtr_configure(&mut self, l_rx: usize) -> Result<()> {
        if self.regs.m_rx != 1 {
            return Err(Error::param("waveform-triggered reception requires m_rx=1"));
        }
        let depth = self.cfg.fifo_depth;
        if !(1..=depth).contains(&l_rx) {
            return Err(Error::param(format!("L_rx={l_rx} outside 1..={depth}")));
        }
        self.reg_write("L_rx", l_rx as u64)?;
        self.reg_write("D_th", (l_rx * (depth / l_rx)) as u64)?;
        self.s_rx = l_rx * R;
        self.reset_transfers_now();
        Ok(())
    }

    /// Trims records returned by [`PlSim::take_transfer`] to `s_rx`.
    pub fn set_s_rx(&mut self, s_rx: usize) {
        self.s_rx = s_rx.max(1);
    }

    /// Pops `n` full-length transfers in FIFO order.
    pub fn wtr_read(&mut self, n: usize) -> Result<Vec<TransferRecord>> {
        let available = self.regs.n_trans as usize;
        if n > available {
            return Err(Error::Availability { requested: n, available });
        }
        Ok((0..n).map(|_| self.pop_record()).collect())
    }

    fn pop_record(&mut self) -> TransferRecord {
        let mut samples = Vec::new();
        while let Some((block, last)) = self.adc.pop() {
            samples.extend_from_slice(&block.0);
            if last {
                break;
            }
        }
        self.regs.n_trans -= 1;
        self.regs.d_adc_i = self.adc.occupancy() as u64;
        self.stats.read_samples += samples.len() as u64;
        let mlast_index = samples.len().saturating_sub(1);
        TransferRecord { samples, mlast_index }
    }

    /// Advances one PL clock. Returns the DAC block for this clock.
    pub fn clock_step(&mut self, adc_block: &IqBlock) -> IqBlock {
        let dac_out = if self.tx_remaining > 0 {
            self.tx_remaining -= 1;
            self.stats.tx_blocks += 1;
            self.dac.pop().map(|(b, _)| b).unwrap_or(IqBlock::ZERO)
        } else {
            IqBlock::ZERO
        };

        if let Some(l) = self.capture_pending.take() {
            self.capture = Some(Capture { remaining: l });
        }
        if let Some(c) = self.capture.as_mut() {
            c.remaining -= 1;
            let last = c.remaining == 0;
            self.adc.push(*adc_block, last);
            self.stats.captured_samples += R as u64;
            if last {
                self.capture = None;
                self.regs.n_trans += 1;
            }
        }

        self.last = self.detector.step(adc_block);
        self.regs.n_detect = self.last.n_detect;
        if self.last.trigger {
            self.on_trigger();
        }
        self.regs.d_adc_i = self.adc.occupancy() as u64;
        self.clock += 1;
        dac_out
    }

    fn on_trigger(&mut self) {
        self.stats.triggers += 1;
        if self.regs.m_rx == 1 && self.regs.e_rx == 1 {
            self.request_capture();
        }
    }

    /// Starts a capture on the next clock unless one is already running or,
    /// under WTR, the FIFO lacks room for another transfer.
    fn request_capture(&mut self) {
        if self.capture_active() {
            self.stats.busy_drops += 1;
            return;
        }
        let request = self.regs.l_rx * R as u64;
        self.stats.offered_samples += request;
        if self.regs.m_rx == 1 && self.adc.occupancy() as u64 >= self.regs.d_th {
            self.stats.backpressure_drops += 1;
            self.stats.dropped_samples += request;
        } else {
            self.capture_pending = Some(self.regs.l_rx);
        }
    }

    /// Runs `clocks` clocks, applying the script's writes for each clock
    /// (absolute, counted from construction) before stepping it.
    pub fn run_script(
        &mut self,
        script: &RegisterScript,
        clocks: u64,
        mut source: impl FnMut(u64) -> IqBlock,
    ) -> Result<Vec<IqBlock>> {
        let mut dac = Vec::with_capacity(clocks as usize);
        for _ in 0..clocks {
            let now = self.clock;
            for e in script.at(now) {
                self.reg_write(&e.register, e.value)?;
            }
            let b = source(now);
            dac.push(self.clock_step(&b));
        }
        Ok(dac)
    }
}
