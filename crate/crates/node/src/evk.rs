use std::fmt;
use std::str::FromStr;

use crate::protocol::ErrorKind;

/// `RXen<0|1>_TXen<0|1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SiverMode {
    pub rx_en: bool,
    pub tx_en: bool,
}

impl SiverMode {
    pub const RX: SiverMode = SiverMode { rx_en: true, tx_en: false };
    pub const TX: SiverMode = SiverMode { rx_en: false, tx_en: true };
}

impl fmt::Display for SiverMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RXen{}_TXen{}", u8::from(self.rx_en), u8::from(self.tx_en))
    }
}

impl FromStr for SiverMode {
    type Err = ErrorKind;

    fn from_str(s: &str) -> Result<Self, ErrorKind> {
        let bit = |c: &str| match c {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(ErrorKind::BadArgument),
        };
        let (rx, tx) = s.split_once('_').ok_or(ErrorKind::BadArgument)?;
        let rx = rx.strip_prefix("RXen").ok_or(ErrorKind::BadArgument)?;
        let tx = tx.strip_prefix("TXen").ok_or(ErrorKind::BadArgument)?;
        Ok(SiverMode { rx_en: bit(rx)?, tx_en: bit(tx)? })
    }
}

/// Three gain register bytes, written and read as two-digit hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GainRegisters(pub [u8; 3]);

impl Default for GainRegisters {
    fn default() -> Self {
        GainRegisters([0x80; 3])
    }
}

impl GainRegisters {
    /// Each register spans ±5 dB around mid-scale (0x80).
    pub fn gain_db(&self) -> f64 {
        self.0.iter().map(|&b| (b as f64 - 128.0) * 5.0 / 127.0).sum()
    }

    pub fn parse(tok: &[&str]) -> Result<Self, ErrorKind> {
        if tok.len() != 3 {
            return Err(ErrorKind::Arity);
        }
        let mut r = [0u8; 3];
        for (v, t) in r.iter_mut().zip(tok) {
            if t.is_empty() || t.len() > 2 {
                return Err(ErrorKind::OutOfRange);
            }
            *v = u8::from_str_radix(t, 16).map_err(|_| ErrorKind::BadArgument)?;
        }
        Ok(GainRegisters(r))
    }
}

impl fmt::Display for GainRegisters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02X} {:02X} {:02X}", self.0[0], self.0[1], self.0[2])
    }
}

/// Front-end settings controlled through the evaluation-kit commands.
#[derive(Debug, Clone, PartialEq)]
pub struct EvkState {
    pub beam_index_tx: u8,
    pub beam_index_rx: u8,
    pub mode: SiverMode,
    pub gain_tx: GainRegisters,
    pub gain_rx: GainRegisters,
    pub carrier_hz: f64,
}

impl Default for EvkState {
    fn default() -> Self {
        EvkState {
            beam_index_tx: 32,
            beam_index_rx: 32,
            mode: SiverMode::default(),
            gain_tx: GainRegisters::default(),
            gain_rx: GainRegisters::default(),
            carrier_hz: 60.48e9,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_strings() {
        for s in ["RXen0_TXen0", "RXen1_TXen0", "RXen0_TXen1", "RXen1_TXen1"] {
            assert_eq!(s.parse::<SiverMode>().unwrap().to_string(), s);
        }
        assert!("RXen2_TXen0".parse::<SiverMode>().is_err());
        assert!("rx".parse::<SiverMode>().is_err());
    }

    #[test]
    fn gains() {
        assert_eq!(GainRegisters::default().gain_db(), 0.0);
        assert!((GainRegisters([0xFF; 3]).gain_db() - 15.0).abs() < 1e-12);
        let g = GainRegisters::parse(&["ff", "77", "FF"]).unwrap();
        assert_eq!(g.to_string(), "FF 77 FF");
        assert_eq!(GainRegisters::parse(&["100", "0", "0"]), Err(ErrorKind::OutOfRange));
        assert_eq!(GainRegisters::parse(&["zz", "0", "0"]), Err(ErrorKind::BadArgument));
    }
}
