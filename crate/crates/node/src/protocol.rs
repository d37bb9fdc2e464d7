//! ASCII control grammar: one command per line, tokens separated by spaces
//! or commas, one response line per command.

use std::fmt;

use crate::evk::{GainRegisters, SiverMode};

pub const MAX_SAMPLES: usize = 1 << 18;

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    SetupReception { m_rx: u8, s_rx: usize },
    ReceiveIqSamples { n_trans: usize, timeout_s: f64 },
    TransmitIqSamples { s_tx: usize },
    GetNumberOfAvailableTransfers,
    SetTransferEnableRxFlag(bool),
    GetBitStreamFileName,
    GetRegisters,
    GetBeamIndexTx,
    SetBeamIndexTx(u8),
    GetBeamIndexRx,
    SetBeamIndexRx(u8),
    GetModeSiver,
    SetModeSiver(SiverMode),
    GetGainRx,
    SetGainRx(GainRegisters),
    GetGainTx,
    SetGainTx(GainRegisters),
    GetCarrierFrequency,
    SetCarrierFrequency(f64),
}

/// Reason token carried by `error <reason>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    UnknownCommand,
    Arity,
    OutOfRange,
    BadArgument,
    Timeout,
    Busy,
    NotEnabled,
    Capacity,
    Unavailable,
    NoDataConnection,
    Io,
}

impl ErrorKind {
    pub fn token(self) -> &'static str {
        match self {
            ErrorKind::UnknownCommand => "unknown-command",
            ErrorKind::Arity => "arity",
            ErrorKind::OutOfRange => "out-of-range",
            ErrorKind::BadArgument => "bad-argument",
            ErrorKind::Timeout => "timeout",
            ErrorKind::Busy => "busy",
            ErrorKind::NotEnabled => "not-enabled",
            ErrorKind::Capacity => "capacity",
            ErrorKind::Unavailable => "unavailable",
            ErrorKind::NoDataConnection => "no-data-connection",
            ErrorKind::Io => "io",
        }
    }

    pub fn from_token(t: &str) -> Option<Self> {
        use ErrorKind::*;
        [
            UnknownCommand,
            Arity,
            OutOfRange,
            BadArgument,
            Timeout,
            Busy,
            NotEnabled,
            Capacity,
            Unavailable,
            NoDataConnection,
            Io,
        ]
        .into_iter()
        .find(|k| k.token() == t)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Success,
    Value(String),
    Error(ErrorKind),
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Success => f.write_str("success"),
            Response::Value(v) => f.write_str(v),
            Response::Error(k) => write!(f, "error {k}"),
        }
    }
}

impl Response {
    pub fn parse(line: &str) -> Response {
        let line = line.trim();
        if line == "success" {
            Response::Success
        } else if let Some(reason) = line.strip_prefix("error ") {
            Response::Error(ErrorKind::from_token(reason.trim()).unwrap_or(ErrorKind::Io))
        } else {
            Response::Value(line.to_string())
        }
    }
}

pub fn tokenize(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect()
}

fn num<T: std::str::FromStr>(t: &str) -> Result<T, ErrorKind> {
    t.parse().map_err(|_| ErrorKind::BadArgument)
}

/// Integers may also be written in scientific notation (`2.048e3`).
fn count(t: &str) -> Result<usize, ErrorKind> {
    if let Ok(v) = t.parse::<usize>() {
        return Ok(v);
    }
    let f: f64 = num(t)?;
    if f >= 0.0 && f.fract() == 0.0 && f <= usize::MAX as f64 {
        Ok(f as usize)
    } else {
        Err(ErrorKind::BadArgument)
    }
}

fn beam(t: &str) -> Result<u8, ErrorKind> {
    let v = count(t)?;
    if v < 64 {
        Ok(v as u8)
    } else {
        Err(ErrorKind::OutOfRange)
    }
}

impl Command {
    pub fn parse(line: &str) -> Result<Command, ErrorKind> {
        let tok = tokenize(line);
        let (&name, args) = tok.split_first().ok_or(ErrorKind::UnknownCommand)?;
        let arity = |n: usize| if args.len() == n { Ok(()) } else { Err(ErrorKind::Arity) };
        use Command::*;
        let cmd = match name {
            "setupReception" => {
                arity(2)?;
                let m_rx = count(args[0])?;
                let s_rx = count(args[1])?;
                if m_rx > 1 || s_rx == 0 || s_rx > MAX_SAMPLES {
                    return Err(ErrorKind::OutOfRange);
                }
                SetupReception { m_rx: m_rx as u8, s_rx }
            }
            "receiveIQSamples" => {
                arity(2)?;
                let n_trans = count(args[0])?;
                let timeout_s: f64 = num(args[1])?;
                if !(timeout_s >= 0.0 && timeout_s.is_finite()) {
                    return Err(ErrorKind::OutOfRange);
                }
                ReceiveIqSamples { n_trans, timeout_s }
            }
            "transmitIQSamples" => {
                arity(1)?;
                let s_tx = count(args[0])?;
                if s_tx == 0 || s_tx > MAX_SAMPLES {
                    return Err(ErrorKind::OutOfRange);
                }
                TransmitIqSamples { s_tx }
            }
            "getNumberOfAvailableTransfers" => {
                arity(0)?;
                GetNumberOfAvailableTransfers
            }
            "setTransferEnableRXFlag" => {
                arity(1)?;
                match args[0] {
                    "0" => SetTransferEnableRxFlag(false),
                    "1" => SetTransferEnableRxFlag(true),
                    _ => return Err(ErrorKind::OutOfRange),
                }
            }
            "getFGPABitStreamFileName" => {
                arity(0)?;
                GetBitStreamFileName
            }
            "getRegisters" => {
                arity(0)?;
                GetRegisters
            }
            "getBeamIndexTX" => {
                arity(0)?;
                GetBeamIndexTx
            }
            "setBeamIndexTX" => {
                arity(1)?;
                SetBeamIndexTx(beam(args[0])?)
            }
            "getBeamIndexRX" => {
                arity(0)?;
                GetBeamIndexRx
            }
            "setBeamIndexRX" => {
                arity(1)?;
                SetBeamIndexRx(beam(args[0])?)
            }
            "getModeSiver" => {
                arity(0)?;
                GetModeSiver
            }
            "setModeSiver" => {
                arity(1)?;
                SetModeSiver(args[0].parse().map_err(|_| ErrorKind::BadArgument)?)
            }
            "getGainRX" => {
                arity(0)?;
                GetGainRx
            }
            "setGainRX" => {
                arity(3)?;
                SetGainRx(GainRegisters::parse(args)?)
            }
            "getGainTX" => {
                arity(0)?;
                GetGainTx
            }
            "setGainTX" => {
                arity(3)?;
                SetGainTx(GainRegisters::parse(args)?)
            }
            "getCarrierFrequency" => {
                arity(0)?;
                GetCarrierFrequency
            }
            "setCarrierFrequency" => {
                arity(1)?;
                let f: f64 = num(args[0])?;
                if mmsdr_core::channel::check_band(f).is_err() {
                    return Err(ErrorKind::OutOfRange);
                }
                SetCarrierFrequency(f)
            }
            _ => return Err(ErrorKind::UnknownCommand),
        };
        Ok(cmd)
    }

    /// Wire form, as the client sends it.
    pub fn to_line(&self) -> String {
        use Command::*;
        match self {
            SetupReception { m_rx, s_rx } => format!("setupReception {m_rx} {s_rx}"),
            ReceiveIqSamples { n_trans, timeout_s } => format!("receiveIQSamples {n_trans} {timeout_s}"),
            TransmitIqSamples { s_tx } => format!("transmitIQSamples {s_tx}"),
            GetNumberOfAvailableTransfers => "getNumberOfAvailableTransfers".into(),
            SetTransferEnableRxFlag(on) => format!("setTransferEnableRXFlag {}", u8::from(*on)),
            GetBitStreamFileName => "getFGPABitStreamFileName".into(),
            GetRegisters => "getRegisters".into(),
            GetBeamIndexTx => "getBeamIndexTX".into(),
            SetBeamIndexTx(i) => format!("setBeamIndexTX {i}"),
            GetBeamIndexRx => "getBeamIndexRX".into(),
            SetBeamIndexRx(i) => format!("setBeamIndexRX {i}"),
            GetModeSiver => "getModeSiver".into(),
            SetModeSiver(m) => format!("setModeSiver {m}"),
            GetGainRx => "getGainRX".into(),
            SetGainRx(g) => format!("setGainRX {g}"),
            GetGainTx => "getGainTX".into(),
            SetGainTx(g) => format!("setGainTX {g}"),
            GetCarrierFrequency => "getCarrierFrequency".into(),
            SetCarrierFrequency(f) => format!("setCarrierFrequency {f:e}"),
        }
    }
}
