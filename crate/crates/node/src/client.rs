use std::io::{self, BufRead, BufReader, ErrorKind as IoKind, Read, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use mmsdr_core::dsp::{iq_from_bytes, iq_to_bytes, IqSample};
use thiserror::Error;

use crate::evk::{GainRegisters, SiverMode};
use crate::protocol::{Command, ErrorKind, Response};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("node replied: error {0}")]
    Remote(ErrorKind),
    #[error("no reply within the i/o timeout")]
    Timeout,
    #[error("protocol: {0}")]
    Protocol(String),
}

impl ClientError {
    pub fn remote_kind(&self) -> Option<ErrorKind> {
        match self {
            ClientError::Remote(k) => Some(*k),
            _ => None,
        }
    }
}

pub type ClientResult<T> = Result<T, ClientError>;

fn read_err(e: io::Error) -> ClientError {
    match e.kind() {
        IoKind::WouldBlock | IoKind::TimedOut => ClientError::Timeout,
        _ => ClientError::Io(e),
    }
}

/// One control session plus its data connection.
#[derive(Debug)]
pub struct NodeClient {
    control: BufReader<TcpStream>,
    writer: TcpStream,
    data: TcpStream,
    io_timeout: Duration,
    s_rx: usize,
}

impl NodeClient {
    pub fn connect(control: impl ToSocketAddrs, data: impl ToSocketAddrs, io_timeout: Duration) -> ClientResult<Self> {
        let c = TcpStream::connect(control)?;
        let d = TcpStream::connect(data)?;
        c.set_nodelay(true)?;
        d.set_nodelay(true)?;
        d.set_read_timeout(Some(io_timeout))?;
        c.set_read_timeout(Some(io_timeout))?;
        Ok(NodeClient {
            writer: c.try_clone()?,
            control: BufReader::new(c),
            data: d,
            io_timeout,
            s_rx: 0,
        })
    }

    pub fn peer(&self) -> io::Result<SocketAddr> {
        self.writer.peer_addr()
    }

    /// `S_rx` of the last successful `setupReception`.
    pub fn s_rx(&self) -> usize {
        self.s_rx
    }

    fn send(&mut self, cmd: &Command) -> ClientResult<()> {
        self.send_raw(&cmd.to_line())
    }

    /// Sends a verbatim control line.
    pub fn send_raw(&mut self, line: &str) -> ClientResult<()> {
        self.writer.write_all(line.trim_end().as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn read_response(&mut self) -> ClientResult<Response> {
        let mut line = String::new();
        let n = self.control.read_line(&mut line).map_err(read_err)?;
        if n == 0 {
            return Err(ClientError::Protocol("control connection closed".into()));
        }
        Ok(Response::parse(&line))
    }

    /// Sends a verbatim line and returns the reply as is.
    pub fn raw(&mut self, line: &str) -> ClientResult<Response> {
        self.send_raw(line)?;
        self.read_response()
    }

    fn call(&mut self, cmd: &Command) -> ClientResult<Response> {
        self.send(cmd)?;
        match self.read_response()? {
            Response::Error(k) => Err(ClientError::Remote(k)),
            r => Ok(r),
        }
    }

    fn expect_success(&mut self, cmd: &Command) -> ClientResult<()> {
        match self.call(cmd)? {
            Response::Success => Ok(()),
            Response::Value(v) => Err(ClientError::Protocol(format!("expected success, got {v:?}"))),
            Response::Error(_) => unreachable!(),
        }
    }

    fn value(&mut self, cmd: &Command) -> ClientResult<String> {
        match self.call(cmd)? {
            Response::Value(v) => Ok(v),
            r => Err(ClientError::Protocol(format!("expected a value, got {r}"))),
        }
    }

    fn parsed<T: std::str::FromStr>(&mut self, cmd: &Command) -> ClientResult<T> {
        let v = self.value(cmd)?;
        v.trim().parse().map_err(|_| ClientError::Protocol(format!("unparsable value {v:?}")))
    }

    pub fn setup_reception(&mut self, m_rx: u8, s_rx: usize) -> ClientResult<()> {
        self.expect_success(&Command::SetupReception { m_rx, s_rx })?;
        self.s_rx = s_rx;
        Ok(())
    }

    /// `n` transfers of `S_rx` samples each.
    pub fn receive_iq(&mut self, n: usize, timeout_s: f64) -> ClientResult<Vec<Vec<IqSample>>> {
        if self.s_rx == 0 {
            return Err(ClientError::Protocol("setupReception has not succeeded yet".into()));
        }
        self.writer.flush()?;
        self.control
            .get_ref()
            .set_read_timeout(Some(self.io_timeout + Duration::from_secs_f64(timeout_s.max(0.0))))?;
        let r = self.expect_success(&Command::ReceiveIqSamples { n_trans: n, timeout_s });
        self.control.get_ref().set_read_timeout(Some(self.io_timeout))?;
        r?;
        let mut buf = vec![0u8; n * self.s_rx * 4];
        self.data.read_exact(&mut buf).map_err(read_err)?;
        let iq = iq_from_bytes(&buf).map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(iq.chunks(self.s_rx).map(<[IqSample]>::to_vec).collect())
    }

    pub fn transmit_iq(&mut self, iq: &[IqSample]) -> ClientResult<()> {
        self.send(&Command::TransmitIqSamples { s_tx: iq.len() })?;
        self.data.write_all(&iq_to_bytes(iq))?;
        self.data.flush()?;
        match self.read_response()? {
            Response::Success => Ok(()),
            Response::Error(k) => Err(ClientError::Remote(k)),
            Response::Value(v) => Err(ClientError::Protocol(format!("expected success, got {v:?}"))),
        }
    }

    pub fn available_transfers(&mut self) -> ClientResult<u64> {
        self.parsed(&Command::GetNumberOfAvailableTransfers)
    }

    pub fn set_rx_enabled(&mut self, on: bool) -> ClientResult<()> {
        self.expect_success(&Command::SetTransferEnableRxFlag(on))
    }

    pub fn bitstream_name(&mut self) -> ClientResult<String> {
        self.value(&Command::GetBitStreamFileName)
    }

    /// Register dump, `name=value` pairs.
    pub fn registers(&mut self) -> ClientResult<Vec<(String, u64)>> {
        let v = self.value(&Command::GetRegisters)?;
        v.split_whitespace()
            .map(|kv| {
                let (k, v) = kv.split_once('=').ok_or_else(|| ClientError::Protocol(format!("bad pair {kv:?}")))?;
                let v = v.parse().map_err(|_| ClientError::Protocol(format!("bad value in {kv:?}")))?;
                Ok((k.to_string(), v))
            })
            .collect()
    }

    pub fn beam_index_tx(&mut self) -> ClientResult<u8> {
        self.parsed(&Command::GetBeamIndexTx)
    }

    pub fn set_beam_index_tx(&mut self, i: u8) -> ClientResult<()> {
        self.expect_success(&Command::SetBeamIndexTx(i))
    }

    pub fn beam_index_rx(&mut self) -> ClientResult<u8> {
        self.parsed(&Command::GetBeamIndexRx)
    }

    pub fn set_beam_index_rx(&mut self, i: u8) -> ClientResult<()> {
        self.expect_success(&Command::SetBeamIndexRx(i))
    }

    pub fn mode(&mut self) -> ClientResult<SiverMode> {
        let v = self.value(&Command::GetModeSiver)?;
        v.parse().map_err(|_| ClientError::Protocol(format!("bad mode {v:?}")))
    }

    pub fn set_mode(&mut self, m: SiverMode) -> ClientResult<()> {
        match self.call(&Command::SetModeSiver(m))? {
            Response::Value(v) if v == m.to_string() => Ok(()),
            r => Err(ClientError::Protocol(format!("unexpected reply {r}"))),
        }
    }

    fn gains(&mut self, cmd: &Command) -> ClientResult<GainRegisters> {
        let v = self.value(cmd)?;
        let tok: Vec<&str> = v.split_whitespace().collect();
        GainRegisters::parse(&tok).map_err(|_| ClientError::Protocol(format!("bad gains {v:?}")))
    }

    pub fn gain_rx(&mut self) -> ClientResult<GainRegisters> {
        self.gains(&Command::GetGainRx)
    }

    pub fn set_gain_rx(&mut self, g: GainRegisters) -> ClientResult<()> {
        self.expect_success(&Command::SetGainRx(g))
    }

    pub fn gain_tx(&mut self) -> ClientResult<GainRegisters> {
        self.gains(&Command::GetGainTx)
    }

    pub fn set_gain_tx(&mut self, g: GainRegisters) -> ClientResult<()> {
        self.expect_success(&Command::SetGainTx(g))
    }

    pub fn carrier_hz(&mut self) -> ClientResult<f64> {
        self.parsed(&Command::GetCarrierFrequency)
    }

    pub fn set_carrier_hz(&mut self, f: f64) -> ClientResult<()> {
        self.expect_success(&Command::SetCarrierFrequency(f))
    }
}
