use std::fmt;

use super::fifo::FIFO_DEPTH;
use crate::{Error, Result};

/// Register names in dump order.
pub const REGISTER_NAMES: [&str; 11] = [
    "L_tx", "t_tx", "L_rx", "t_rx_s", "m_rx", "e_rx", "r_trans", "D_th", "N_trans", "N_detect", "D_adc_I",
];

const READ_ONLY: [&str; 3] = ["N_trans", "N_detect", "D_adc_I"];

/// Reception mode held in `m_rx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RxMode {
    Software = 0,
    Waveform = 1,
}

/// The monitor register file. Edge flags keep their level; the simulator
/// reacts when a write moves them from 0 to 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonitorRegisters {
    pub l_tx: u64,
    pub t_tx: u64,
    pub l_rx: u64,
    pub t_rx_s: u64,
    pub m_rx: u64,
    pub e_rx: u64,
    pub r_trans: u64,
    pub d_th: u64,
    pub n_trans: u64,
    pub n_detect: u64,
    pub d_adc_i: u64,
}

impl Default for MonitorRegisters {
    fn default() -> Self {
        MonitorRegisters {
            l_tx: 0,
            t_tx: 0,
            l_rx: 1,
            t_rx_s: 0,
            m_rx: 0,
            e_rx: 0,
            r_trans: 0,
            d_th: FIFO_DEPTH as u64,
            n_trans: 0,
            n_detect: 0,
            d_adc_i: 0,
        }
    }
}

/// Which edge a write produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    TxStart,
    RxStart,
    ResetTransfers,
}

impl MonitorRegisters {
    pub fn rx_mode(&self) -> RxMode {
        if self.m_rx == 1 {
            RxMode::Waveform
        } else {
            RxMode::Software
        }
    }

    fn canonical(name: &str) -> Result<&'static str> {
        REGISTER_NAMES
            .iter()
            .copied()
            .find(|r| r.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownRegister(name.to_string()))
    }

    pub fn read(&self, name: &str) -> Result<u64> {
        Ok(match Self::canonical(name)? {
            "L_tx" => self.l_tx,
            "t_tx" => self.t_tx,
            "L_rx" => self.l_rx,
            "t_rx_s" => self.t_rx_s,
            "m_rx" => self.m_rx,
            "e_rx" => self.e_rx,
            "r_trans" => self.r_trans,
            "D_th" => self.d_th,
            "N_trans" => self.n_trans,
            "N_detect" => self.n_detect,
            _ => self.d_adc_i,
        })
    }

    /// Validated write from the PS side. Returns the edge, if any.
    pub(crate) fn write(&mut self, name: &str, value: u64, depth: usize) -> Result<Option<Edge>> {
        let reg = Self::canonical(name)?;
        if READ_ONLY.contains(&reg) {
            return Err(Error::Permission(reg));
        }
        let depth = depth as u64;
        let check = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::param(format!("{reg}={value} out of range")))
            }
        };
        let edge = |old: u64, edge: Edge| (old == 0 && value == 1).then_some(edge);
        match reg {
            "L_tx" => {
                check(value <= depth)?;
                self.l_tx = value;
                Ok(None)
            }
            "L_rx" => {
                check((1..=depth).contains(&value))?;
                self.l_rx = value;
                Ok(None)
            }
            "D_th" => {
                check(value <= depth)?;
                self.d_th = value;
                Ok(None)
            }
            "m_rx" => {
                check(value <= 1)?;
                self.m_rx = value;
                Ok(None)
            }
            "e_rx" => {
                check(value <= 1)?;
                self.e_rx = value;
                Ok(None)
            }
            "t_tx" => {
                check(value <= 1)?;
                let e = edge(self.t_tx, Edge::TxStart);
                self.t_tx = value;
                Ok(e)
            }
            "t_rx_s" => {
                check(value <= 1)?;
                let e = edge(self.t_rx_s, Edge::RxStart);
                self.t_rx_s = value;
                Ok(e)
            }
            _ => {
                check(value <= 1)?;
                let e = edge(self.r_trans, Edge::ResetTransfers);
                self.r_trans = value;
                Ok(e)
            }
        }
    }
}

impl fmt::Display for MonitorRegisters {
    /// `name=value` pairs separated by spaces.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, name) in REGISTER_NAMES.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}={}", name, self.read(name).unwrap_or_default())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_permissions() {
        let mut r = MonitorRegisters::default();
        r.write("m_rx", 1, FIFO_DEPTH).unwrap();
        assert_eq!(r.read("m_rx").unwrap(), 1);
        assert_eq!(r.rx_mode(), RxMode::Waveform);
        assert_eq!(r.write("N_trans", 3, FIFO_DEPTH), Err(Error::Permission("N_trans")));
        assert!(matches!(r.read("bogus"), Err(Error::UnknownRegister(_))));
        assert!(r.write("m_rx", 2, FIFO_DEPTH).is_err());
        assert!(r.write("L_rx", 0, FIFO_DEPTH).is_err());
        assert!(r.write("L_rx", FIFO_DEPTH as u64 + 1, FIFO_DEPTH).is_err());
    }

    #[test]
    fn edges_fire_once() {
        let mut r = MonitorRegisters::default();
        assert_eq!(r.write("t_tx", 1, FIFO_DEPTH).unwrap(), Some(Edge::TxStart));
        assert_eq!(r.write("t_tx", 1, FIFO_DEPTH).unwrap(), None);
        assert_eq!(r.write("t_tx", 0, FIFO_DEPTH).unwrap(), None);
        assert_eq!(r.write("t_tx", 1, FIFO_DEPTH).unwrap(), Some(Edge::TxStart));
    }

    #[test]
    fn dump_lists_every_register() {
        let s = MonitorRegisters::default().to_string();
        for name in REGISTER_NAMES {
            assert!(s.contains(&format!("{name}=")), "{s}");
        }
    }
}
