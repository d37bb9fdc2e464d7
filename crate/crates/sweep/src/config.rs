use std::collections::BTreeMap;
use std::fmt;

use mmsdr_core::channel::{check_band, CODEBOOK_SIZE};
use mmsdr_node::MAX_SAMPLES;

use crate::error::{Result, SweepError};

/// One foot, the spacing between measurement locations.
pub const LOCATION_STEP_M: f64 = 0.3048;
pub const DEFAULT_CARRIERS_HZ: [f64; 2] = [60.48e9, 65.34e9];
pub const DEFAULT_S_RX: usize = 1580;

/// 25 locations from 9.75 m towards the fixed node.
pub fn default_distances() -> Vec<f64> {
    // rounded to 0.1 mm so echoes and file names stay short
    (0..25).map(|k| ((9.75 - k as f64 * LOCATION_STEP_M) * 1e4).round() / 1e4).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub distances_m: Vec<f64>,
    pub carriers_hz: Vec<f64>,
    pub tx_indices: Vec<u8>,
    pub rx_indices: Vec<u8>,
    /// Per-RX-index wait, also the receive timeout.
    pub dwell_seconds: f64,
    /// Samples per transfer.
    pub s_rx: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            distances_m: default_distances(),
            carriers_hz: DEFAULT_CARRIERS_HZ.to_vec(),
            tx_indices: (0..CODEBOOK_SIZE as u8).collect(),
            rx_indices: (0..CODEBOOK_SIZE as u8).collect(),
            dwell_seconds: 2.0,
            s_rx: DEFAULT_S_RX,
            seed: 0,
        }
    }
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| SweepError::Config(format!("{key}: bad value {t:?}"))))
        .collect()
}

fn scalar<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| SweepError::Config(format!("{key}: bad value {v:?}")))
}

/// `0-63`, `13,32` or a mix such as `0-3, 32`.
pub fn parse_indices(key: &str, v: &str) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for t in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = || SweepError::Config(format!("{key}: bad index range {t:?}"));
        match t.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u8, u8) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(t.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(SweepError::Config(m));
        if self.distances_m.is_empty() || self.carriers_hz.is_empty() {
            return err("distance and carrier lists must not be empty".into());
        }
        if self.tx_indices.is_empty() || self.rx_indices.is_empty() {
            return err("index lists must not be empty".into());
        }
        if let Some(i) = self.tx_indices.iter().chain(&self.rx_indices).find(|&&i| i as usize >= CODEBOOK_SIZE) {
            return err(format!("AWV index {i} outside the codebook"));
        }
        if let Some(d) = self.distances_m.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return err(format!("distance {d} m"));
        }
        for &f in &self.carriers_hz {
            check_band(f)?;
        }
        if !(self.dwell_seconds > 0.0 && self.dwell_seconds.is_finite()) {
            return err(format!("dwell {} s", self.dwell_seconds));
        }
        if !(1..=MAX_SAMPLES).contains(&self.s_rx) {
            return err(format!("S_rx {} outside 1..={MAX_SAMPLES}", self.s_rx));
        }
        Ok(())
    }

    /// Applies a `[sweep]` section of a scene file.
    pub fn apply_section(&mut self, section: &BTreeMap<String, String>) -> Result<()> {
        for (k, v) in section {
            match k.as_str() {
                "distances_m" => self.distances_m = parse_list(k, v)?,
                "carriers_hz" => self.carriers_hz = parse_list(k, v)?,
                "tx_indices" => self.tx_indices = parse_indices(k, v)?,
                "rx_indices" => self.rx_indices = parse_indices(k, v)?,
                "dwell_seconds" => self.dwell_seconds = scalar(k, v)?,
                "s_rx" => self.s_rx = scalar(k, v)?,
                "seed" => self.seed = scalar(k, v)?,
                _ => return Err(SweepError::Config(format!("unknown sweep key {k:?}"))),
            }
        }
        self.validate()
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Single-line `key=value` echo, used in dataset headers.
impl fmt::Display for SweepConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "distances_m={} carriers_hz={} tx_indices={} rx_indices={} dwell_seconds={} s_rx={} seed={}",
            join(&self.distances_m),
            join(&self.carriers_hz),
            join(&self.tx_indices),
            join(&self.rx_indices),
            self.dwell_seconds,
            self.s_rx,
            self.seed
        )
    }
}
