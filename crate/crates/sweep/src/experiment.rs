use std::time::Duration;

use log::{debug, info, warn};
use mmsdr_core::channel::ChannelScene;
use mmsdr_core::plsim::PlConfig;
use mmsdr_node::{Medium, NodeClient, SiverMode, Testbed};

use crate::analysis::SweepRecord;
use crate::config::SweepConfig;
use crate::error::{Result, SweepError};
use crate::frame::FrameBuilder;
use crate::matrix::SnrMatrix;

/// Socket timeout used by the in-process campaign clients.
pub const CLIENT_IO_TIMEOUT: Duration = Duration::from_secs(60);

/// Transmits one frame per index, in order. Returns the indices sent.
pub fn run_announcement(tx: &mut NodeClient, frames: &FrameBuilder, indices: &[u8]) -> Result<Vec<u8>> {
    let mut log = Vec::with_capacity(indices.len());
    for &index in indices {
        tx.set_beam_index_tx(index).map_err(|source| SweepError::Announcement { index, source })?;
        tx.transmit_iq(frames.frame(index)).map_err(|source| SweepError::Announcement { index, source })?;
        log.push(index);
    }
    Ok(log)
}

/// True if `decoded` is an ordered subsequence of `announced`: every
/// decoded index was sent, and in the same order.
pub fn consistent_with_log(decoded: &[u8], announced: &[u8]) -> bool {
    let mut it = announced.iter();
    decoded.iter().all(|d| it.any(|a| a == d))
}

/// Result of one 64 × 64 sweep at a fixed location and carrier.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub carrier_hz: f64,
    pub distance_m: f64,
    pub matrix: SnrMatrix,
    pub records: Vec<SweepRecord>,
    /// Announcement log per RX index step.
    pub announcements: Vec<(u8, Vec<u8>)>,
    pub decode_ok: usize,
    /// Decodes of a pair already in the matrix.
    pub duplicates: usize,
    /// RX steps whose decoded indices disagree with the announcement log.
    pub log_mismatches: usize,
    /// Longest announcement round in simulated seconds, when the medium
    /// is local.
    pub max_announce_s: Option<f64>,
}

/// Runs the RX-index loop: arm, announce, read, decode.
pub fn run_sweep(
    tx: &mut NodeClient,
    rx: &mut NodeClient,
    cfg: &SweepConfig,
    frames: &FrameBuilder,
    carrier_hz: f64,
    distance_m: f64,
    medium: Option<&Medium>,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    tx.set_mode(SiverMode::TX)?;
    rx.set_mode(SiverMode::RX)?;
    tx.set_carrier_hz(carrier_hz)?;
    rx.set_carrier_hz(carrier_hz)?;
    let mut out = SweepOutcome {
        carrier_hz,
        distance_m,
        matrix: SnrMatrix::new(),
        records: Vec::new(),
        announcements: Vec::new(),
        decode_ok: 0,
        duplicates: 0,
        log_mismatches: 0,
        max_announce_s: None,
    };
    let clock = || medium.map(|m| m.lock().clock());
    let f_sample = medium.map(|m| m.scene().f_sample);
    for &r in &cfg.rx_indices {
        rx.set_beam_index_rx(r)?;
        rx.setup_reception(1, cfg.s_rx)?;
        rx.set_rx_enabled(true)?;
        let t0 = clock();
        let log = run_announcement(tx, frames, &cfg.tx_indices)?;
        if let (Some(t0), Some(t1), Some(fs)) = (t0, clock(), f_sample) {
            let secs = (t1 - t0) as f64 * mmsdr_core::R as f64 / fs;
            if secs > cfg.dwell_seconds {
                warn!("announcement round took {secs:.3} s of simulated time, dwell is {} s", cfg.dwell_seconds);
            }
            out.max_announce_s = Some(out.max_announce_s.map_or(secs, |m: f64| m.max(secs)));
        }
        let n = rx.available_transfers()? as usize;
        let transfers = if n > 0 { rx.receive_iq(n, cfg.dwell_seconds)? } else { Vec::new() };
        rx.set_rx_enabled(false)?;
        let mut decoded = Vec::new();
        for (k, iq) in transfers.into_iter().enumerate() {
            let rec = SweepRecord::new(frames.modem(), carrier_hz, distance_m, r, k, iq)?;
            if let Some((t, snr)) = rec.decoded() {
                out.decode_ok += 1;
                decoded.push(t);
                if !out.matrix.set(t as usize, r as usize, snr) {
                    out.duplicates += 1;
                }
            }
            out.records.push(rec);
        }
        if !consistent_with_log(&decoded, &log) {
            warn!("rx {r}: decoded {decoded:?} does not follow the announcement order");
            out.log_mismatches += 1;
        }
        debug!("rx {r}: {n} transfers, {} decoded", decoded.len());
        out.announcements.push((r, log));
    }
    info!(
        "f_c {:.2} GHz, {distance_m:.4} m: {} of {} pairs decoded",
        carrier_hz / 1e9,
        out.matrix.filled(),
        cfg.tx_indices.len() * cfg.rx_indices.len()
    );
    Ok(out)
}

/// Seed of the link noise at one campaign point. The reverse link of a
/// medium uses `seed + 1`, hence the stride.
pub fn point_seed(base: u64, point: usize) -> u64 {
    base.wrapping_add(2 * point as u64)
}

/// Every (distance, carrier) point on its own in-process two-node
/// testbed, in configuration order.
pub fn run_campaign(scene: &ChannelScene, cfg: &SweepConfig, pl: &PlConfig, frames: &FrameBuilder) -> Result<Vec<SweepOutcome>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (i, &d) in cfg.distances_m.iter().enumerate() {
        for (j, &fc) in cfg.carriers_hz.iter().enumerate() {
            let mut s = scene.clone();
            s.distance_m = d;
            s.carrier_hz = fc;
            s.seed = point_seed(cfg.seed, i * cfg.carriers_hz.len() + j);
            s.validate()?;
            let tb = Testbed::start(s, pl.clone())?;
            let (mut tx, mut rx) = tb.connect(CLIENT_IO_TIMEOUT)?;
            out.push(run_sweep(&mut tx, &mut rx, cfg, frames, fc, d, Some(&tb.medium))?);
        }
    }
    Ok(out)
}
