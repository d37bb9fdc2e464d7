use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mmsdr_core::channel::CODEBOOK_SIZE;

use crate::error::{Result, SweepError};

/// Colour-scale limits of the plotting companion file.
pub const PLOT_MIN_DB: f64 = 0.0;
pub const PLOT_MAX_DB: f64 = 30.0;

/// SNR in dB per `[tx_awv][rx_awv]` pair; `None` where nothing decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrMatrix {
    cells: Vec<Option<f64>>,
}

impl Default for SnrMatrix {
    fn default() -> Self {
        SnrMatrix { cells: vec![None; CODEBOOK_SIZE * CODEBOOK_SIZE] }
    }
}

impl SnrMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, tx: usize, rx: usize) -> Option<f64> {
        self.cells[tx * CODEBOOK_SIZE + rx]
    }

    /// Stores `snr_db`. A second decode of the same pair keeps the larger
    /// value; returns `false` in that case.
    pub fn set(&mut self, tx: usize, rx: usize, snr_db: f64) -> bool {
        assert!(snr_db.is_finite(), "SNR must be finite");
        let c = &mut self.cells[tx * CODEBOOK_SIZE + rx];
        match c {
            Some(old) => {
                *old = old.max(snr_db);
                false
            }
            None => {
                *c = Some(snr_db);
                true
            }
        }
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().flatten().count()
    }

    /// `(tx, rx, snr)` of the largest entry; ties go to the lowest index.
    pub fn argmax(&self) -> Option<(usize, usize, f64)> {
        self.argmax_where(|_, _| true)
    }

    pub fn argmax_where(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (k, v) in self.cells.iter().enumerate() {
            let (tx, rx) = (k / CODEBOOK_SIZE, k % CODEBOOK_SIZE);
            if let Some(v) = *v {
                if keep(tx, rx) && best.is_none_or(|b| v > b.2) {
                    best = Some((tx, rx, v));
                }
            }
        }
        best
    }

    /// True if `(tx, rx)` is present and no 8-neighbour exceeds it.
    pub fn is_local_max(&self, tx: usize, rx: usize) -> bool {
        let Some(v) = self.get(tx, rx) else { return false };
        let n = CODEBOOK_SIZE as isize;
        (-1..=1).all(|dt: isize| {
            (-1..=1).all(|dr: isize| {
                let (t, r) = (tx as isize + dt, rx as isize + dr);
                !(0..n).contains(&t) || !(0..n).contains(&r) || self.get(t as usize, r as usize).is_none_or(|w| w <= v)
            })
        })
    }

    /// Rows are TX indices, columns RX indices; absent entries are blank.
    pub fn to_csv(&self, clip: Option<(f64, f64)>) -> String {
        let mut out = String::new();
        for tx in 0..CODEBOOK_SIZE {
            for rx in 0..CODEBOOK_SIZE {
                if rx > 0 {
                    out.push(',');
                }
                if let Some(v) = self.get(tx, rx) {
                    let v = clip.map_or(v, |(lo, hi)| v.clamp(lo, hi));
                    let _ = write!(out, "{v:.3}");
                }
            }
            out.push('\n');
        }
        out
    }

    /// Writes `<stem>.csv` and the `[0, 30]` dB clipped `<stem>_clipped.csv`.
    /// Returns both paths.
    pub fn write_csv(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let raw = dir.join(format!("{stem}.csv"));
        let clipped = dir.join(format!("{stem}_clipped.csv"));
        std::fs::write(&raw, self.to_csv(None)).map_err(|e| SweepError::io(&raw, e))?;
        std::fs::write(&clipped, self.to_csv(Some((PLOT_MIN_DB, PLOT_MAX_DB))))
            .map_err(|e| SweepError::io(&clipped, e))?;
        Ok((raw, clipped))
    }
}
