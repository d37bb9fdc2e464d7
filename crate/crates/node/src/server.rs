use std::io::{self, BufRead, BufReader, ErrorKind as IoKind, Read, Write};
use std::net::{IpAddr, Ipv4Addr, SocketAddr, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{debug, info, warn};
use mmsdr_core::dsp::{iq_from_bytes, iq_to_bytes, IqSample};
use mmsdr_core::plsim::RxMode;

use crate::medium::{Medium, Side};
use crate::protocol::{Command, ErrorKind, Response};
use crate::transcript::{Direction, Transcript};
use crate::NodeError;

pub const DEFAULT_CONTROL_PORT: u16 = 8080;
pub const DEFAULT_DATA_PORT: u16 = 8081;
pub const CONTROL_PORT_ENV: &str = "MMSDR_CONTROL_PORT";
pub const DATA_PORT_ENV: &str = "MMSDR_DATA_PORT";

const POLL: Duration = Duration::from_millis(2);
const READ_POLL: Duration = Duration::from_millis(50);
const DATA_GRACE_POLLS: usize = 250;

/// Name returned by `getFGPABitStreamFileName`.
pub fn bitstream_name() -> String {
    format!("mmsdr-sim-{}.bit", env!("CARGO_PKG_VERSION"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    pub bind: IpAddr,
    /// 0 picks a free port.
    pub control_port: u16,
    pub data_port: u16,
    pub name: String,
    pub transcript: Option<PathBuf>,
    /// Limit for data-port reads during `transmitIQSamples`.
    pub io_timeout: Duration,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            control_port: DEFAULT_CONTROL_PORT,
            data_port: DEFAULT_DATA_PORT,
            name: "node".into(),
            transcript: None,
            io_timeout: Duration::from_secs(10),
        }
    }
}

impl NodeConfig {
    /// Ephemeral ports on loopback, for tests and in-process testbeds.
    pub fn ephemeral(name: &str) -> Self {
        NodeConfig { control_port: 0, data_port: 0, name: name.into(), ..NodeConfig::default() }
    }

    /// Applies `MMSDR_CONTROL_PORT` / `MMSDR_DATA_PORT` when set.
    pub fn with_env(mut self) -> Result<Self, NodeError> {
        for (var, port) in [(CONTROL_PORT_ENV, &mut self.control_port), (DATA_PORT_ENV, &mut self.data_port)] {
            if let Ok(v) = std::env::var(var) {
                *port = v.trim().parse().map_err(|_| NodeError::Config(format!("{var}={v:?} is not a port")))?;
            }
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), NodeError> {
        if self.control_port != 0 && self.control_port == self.data_port {
            return Err(NodeError::Config(format!("control and data port are both {}", self.control_port)));
        }
        Ok(())
    }
}

struct Shared {
    medium: Arc<Medium>,
    side: Side,
    data: Mutex<Option<TcpStream>>,
    session_active: AtomicBool,
    stop: AtomicBool,
    transcript: Option<Transcript>,
    control_port: u16,
    data_port: u16,
    io_timeout: Duration,
}

impl Shared {
    fn log(&self, port: u16, dir: Direction, payload: &str) {
        if let Some(t) = &self.transcript {
            t.record(port, dir, payload);
        }
    }
}

/// A node service running on its own threads. Dropping it stops the
/// service.
pub struct RunningNode {
    control_addr: SocketAddr,
    data_addr: SocketAddr,
    shared: Arc<Shared>,
    threads: Vec<JoinHandle<()>>,
}

impl RunningNode {
    pub fn control_addr(&self) -> SocketAddr {
        self.control_addr
    }

    pub fn data_addr(&self) -> SocketAddr {
        self.data_addr
    }

    pub fn side(&self) -> Side {
        self.shared.side
    }

    pub fn medium(&self) -> &Arc<Medium> {
        &self.shared.medium
    }

    pub fn shutdown(mut self) {
        self.stop_threads();
    }

    /// Blocks until the service stops (it only stops on shutdown).
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    fn stop_threads(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for RunningNode {
    fn drop(&mut self) {
        self.stop_threads();
    }
}

fn bind(ip: IpAddr, port: u16) -> Result<TcpListener, NodeError> {
    let l = TcpListener::bind((ip, port)).map_err(|source| NodeError::Bind { port, source })?;
    l.set_nonblocking(true).map_err(|source| NodeError::Bind { port, source })?;
    Ok(l)
}

/// Starts the control and data services of radio `side` of `medium`.
pub fn serve(config: &NodeConfig, medium: Arc<Medium>, side: Side) -> Result<RunningNode, NodeError> {
    config.validate()?;
    let control = bind(config.bind, config.control_port)?;
    let data = bind(config.bind, config.data_port)?;
    let control_addr = control.local_addr().map_err(|source| NodeError::Bind { port: config.control_port, source })?;
    let data_addr = data.local_addr().map_err(|source| NodeError::Bind { port: config.data_port, source })?;
    let transcript = match &config.transcript {
        Some(p) => Some(Transcript::create(p).map_err(|e| NodeError::Config(format!("transcript {p:?}: {e}")))?),
        None => None,
    };
    let shared = Arc::new(Shared {
        medium,
        side,
        data: Mutex::new(None),
        session_active: AtomicBool::new(false),
        stop: AtomicBool::new(false),
        transcript,
        control_port: control_addr.port(),
        data_port: data_addr.port(),
        io_timeout: config.io_timeout,
    });
    info!("{}: control on {control_addr}, data on {data_addr}", config.name);

    let s = shared.clone();
    let control_thread = thread::Builder::new()
        .name(format!("{}-control", config.name))
        .spawn(move || accept_control(control, s))
        .map_err(|e| NodeError::Config(e.to_string()))?;
    let s = shared.clone();
    let data_thread = thread::Builder::new()
        .name(format!("{}-data", config.name))
        .spawn(move || accept_data(data, s))
        .map_err(|e| NodeError::Config(e.to_string()))?;

    Ok(RunningNode { control_addr, data_addr, shared, threads: vec![control_thread, data_thread] })
}

fn accept_data(listener: TcpListener, shared: Arc<Shared>) {
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                debug!("data connection from {peer}");
                let _ = stream.set_nonblocking(false);
                let _ = stream.set_nodelay(true);
                shared.log(shared.data_port, Direction::In, &format!("<connect {peer}>"));
                *shared.data.lock().unwrap_or_else(|e| e.into_inner()) = Some(stream);
            }
            Err(e) if e.kind() == IoKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                warn!("data accept: {e}");
                thread::sleep(POLL);
            }
        }
    }
}

fn accept_control(listener: TcpListener, shared: Arc<Shared>) {
    let mut sessions: Vec<JoinHandle<()>> = Vec::new();
    while !shared.stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((mut stream, peer)) => {
                let _ = stream.set_nonblocking(false);
                if shared.session_active.swap(true, Ordering::SeqCst) {
                    debug!("refusing second control connection from {peer}");
                    let _ = stream.write_all(format!("{}\n", Response::Error(ErrorKind::Busy)).as_bytes());
                    continue;
                }
                let s = shared.clone();
                sessions.push(thread::spawn(move || {
                    if let Err(e) = session(stream, &s) {
                        debug!("control session ended: {e}");
                    }
                    s.session_active.store(false, Ordering::SeqCst);
                }));
            }
            Err(e) if e.kind() == IoKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                warn!("control accept: {e}");
                thread::sleep(POLL);
            }
        }
        sessions.retain(|h| !h.is_finished());
    }
    for h in sessions {
        let _ = h.join();
    }
}

fn session(stream: TcpStream, shared: &Shared) -> io::Result<()> {
    stream.set_read_timeout(Some(READ_POLL))?;
    let _ = stream.set_nodelay(true);
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    loop {
        if shared.stop.load(Ordering::SeqCst) {
            return Ok(());
        }
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => return Ok(()),
            Ok(_) if line.ends_with(b"\n") => {
                let text = String::from_utf8_lossy(&line).trim().to_string();
                line.clear();
                if text.is_empty() {
                    continue;
                }
                shared.log(shared.control_port, Direction::In, &text);
                handle_line(&text, shared, &mut writer)?;
            }
            // EOF without a newline
            Ok(_) => return Ok(()),
            Err(e) if matches!(e.kind(), IoKind::WouldBlock | IoKind::TimedOut) => continue,
            Err(e) => return Err(e),
        }
    }
}

fn reply(shared: &Shared, w: &mut TcpStream, r: &Response) -> io::Result<()> {
    let s = r.to_string();
    shared.log(shared.control_port, Direction::Out, &s);
    w.write_all(s.as_bytes())?;
    w.write_all(b"\n")?;
    w.flush()
}

fn core_error(e: &mmsdr_core::Error) -> ErrorKind {
    use mmsdr_core::Error as E;
    match e {
        E::NotEnabled => ErrorKind::NotEnabled,
        E::Busy => ErrorKind::Busy,
        E::Capacity { .. } => ErrorKind::Capacity,
        E::Availability { .. } => ErrorKind::Unavailable,
        E::Parameter(_) => ErrorKind::OutOfRange,
        _ => ErrorKind::Io,
    }
}

fn handle_line(line: &str, shared: &Shared, w: &mut TcpStream) -> io::Result<()> {
    let cmd = match Command::parse(line) {
        Ok(c) => c,
        Err(k) => return reply(shared, w, &Response::Error(k)),
    };
    match cmd {
        Command::ReceiveIqSamples { n_trans, timeout_s } => receive(shared, w, n_trans, timeout_s),
        Command::TransmitIqSamples { s_tx } => transmit(shared, w, s_tx),
        other => {
            let r = execute(shared, other);
            shared.medium.notify();
            reply(shared, w, &r)
        }
    }
}

/// Commands without a data-port phase.
fn execute(shared: &Shared, cmd: Command) -> Response {
    let mut st = shared.medium.lock();
    let radio = st.radio_mut(shared.side);
    let done = |r: mmsdr_core::Result<()>| match r {
        Ok(()) => Response::Success,
        Err(e) => Response::Error(core_error(&e)),
    };
    match cmd {
        Command::SetupReception { m_rx, s_rx } => {
            let pl = &mut radio.pl;
            done((|| {
                if m_rx == 1 {
                    pl.set_rx_mode(RxMode::Waveform)?;
                    pl.wtr_configure(s_rx.div_ceil(mmsdr_core::R))?;
                } else {
                    pl.set_rx_mode(RxMode::Software)?;
                    pl.reset_transfers()?;
                }
                pl.set_s_rx(s_rx);
                Ok(())
            })())
        }
        Command::GetNumberOfAvailableTransfers => Response::Value(radio.pl.n_trans().to_string()),
        Command::SetTransferEnableRxFlag(on) => done(radio.pl.set_rx_enabled(on)),
        Command::GetBitStreamFileName => Response::Value(bitstream_name()),
        Command::GetRegisters => Response::Value(radio.pl.registers().to_string()),
        Command::GetBeamIndexTx => Response::Value(radio.evk.beam_index_tx.to_string()),
        Command::SetBeamIndexTx(i) => {
            radio.evk.beam_index_tx = i;
            Response::Success
        }
        Command::GetBeamIndexRx => Response::Value(radio.evk.beam_index_rx.to_string()),
        Command::SetBeamIndexRx(i) => {
            radio.evk.beam_index_rx = i;
            Response::Success
        }
        Command::GetModeSiver => Response::Value(radio.evk.mode.to_string()),
        Command::SetModeSiver(m) => {
            radio.evk.mode = m;
            Response::Value(m.to_string())
        }
        Command::GetGainRx => Response::Value(radio.evk.gain_rx.to_string()),
        Command::SetGainRx(g) => {
            radio.evk.gain_rx = g;
            Response::Success
        }
        Command::GetGainTx => Response::Value(radio.evk.gain_tx.to_string()),
        Command::SetGainTx(g) => {
            radio.evk.gain_tx = g;
            Response::Success
        }
        Command::GetCarrierFrequency => Response::Value(format!("{:e}", radio.evk.carrier_hz)),
        Command::SetCarrierFrequency(f) => {
            radio.evk.carrier_hz = f;
            Response::Success
        }
        Command::ReceiveIqSamples { .. } | Command::TransmitIqSamples { .. } => unreachable!("data commands"),
    }
}

/// The current data connection. A client usually opens it right before
/// the first data command, so a short grace period covers the accept race.
fn take_data(shared: &Shared) -> Option<TcpStream> {
    for _ in 0..DATA_GRACE_POLLS {
        if let Some(s) = shared.data.lock().unwrap_or_else(|e| e.into_inner()).take() {
            return Some(s);
        }
        thread::sleep(POLL);
    }
    None
}

fn put_data(shared: &Shared, s: TcpStream) {
    let mut slot = shared.data.lock().unwrap_or_else(|e| e.into_inner());
    // a newer connection that arrived meanwhile wins
    if slot.is_none() {
        *slot = Some(s);
    }
}

fn receive(shared: &Shared, w: &mut TcpStream, n: usize, timeout_s: f64) -> io::Result<()> {
    let Some(mut data) = take_data(shared) else {
        return reply(shared, w, &Response::Error(ErrorKind::NoDataConnection));
    };
    let result = collect_transfers(shared, n, timeout_s);
    shared.medium.notify();
    let out = match result {
        Ok(records) => {
            reply(shared, w, &Response::Success)?;
            let samples: Vec<IqSample> = records.into_iter().flatten().collect();
            let bytes = iq_to_bytes(&samples);
            shared.log(shared.data_port, Direction::Out, &format!("<{} bytes>", bytes.len()));
            data.write_all(&bytes).and_then(|_| data.flush())
        }
        Err(k) => reply(shared, w, &Response::Error(k)),
    };
    put_data(shared, data);
    out
}

/// Transfers trimmed to `S_rx`, oldest first.
fn collect_transfers(shared: &Shared, n: usize, timeout_s: f64) -> Result<Vec<Vec<IqSample>>, ErrorKind> {
    let side = shared.side;
    let mode = shared.medium.lock().radio(side).pl.registers().rx_mode();
    match mode {
        RxMode::Waveform => {
            if shared.medium.lock().radio(side).pl.registers().e_rx != 1 {
                return Err(ErrorKind::NotEnabled);
            }
            let timeout = Duration::from_secs_f64(timeout_s);
            let (mut st, ok) = shared.medium.wait_until(timeout, |st| st.radio(side).pl.n_trans() as usize >= n);
            if !ok {
                return Err(ErrorKind::Timeout);
            }
            let pl = &mut st.radio_mut(side).pl;
            let s_rx = pl.s_rx();
            let recs = pl.wtr_read(n).map_err(|e| core_error(&e))?;
            Ok(recs
                .into_iter()
                .map(|mut r| {
                    r.samples.truncate(s_rx);
                    r.samples
                })
                .collect())
        }
        RxMode::Software => {
            let mut st = shared.medium.lock();
            let mut out = Vec::with_capacity(n);
            for _ in 0..n {
                let s_rx = st.radio(side).pl.s_rx();
                st.radio_mut(side).pl.str_arm(s_rx).map_err(|e| core_error(&e))?;
                st.run_until_quiet().map_err(|e| core_error(&e))?;
                let rec = st.radio_mut(side).pl.take_transfer().ok_or(ErrorKind::Io)?;
                out.push(rec.samples);
            }
            Ok(out)
        }
    }
}

fn transmit(shared: &Shared, w: &mut TcpStream, s_tx: usize) -> io::Result<()> {
    let Some(mut data) = take_data(shared) else {
        return reply(shared, w, &Response::Error(ErrorKind::NoDataConnection));
    };
    let mut buf = vec![0u8; s_tx * 4];
    let _ = data.set_read_timeout(Some(shared.io_timeout));
    let read = data.read_exact(&mut buf);
    let _ = data.set_read_timeout(None);
    put_data(shared, data);
    if let Err(e) = read {
        let kind = if matches!(e.kind(), IoKind::WouldBlock | IoKind::TimedOut) {
            ErrorKind::Timeout
        } else {
            ErrorKind::Io
        };
        return reply(shared, w, &Response::Error(kind));
    }
    shared.log(shared.data_port, Direction::In, &format!("<{} bytes>", buf.len()));
    let iq = iq_from_bytes(&buf).expect("length is a multiple of 4");
    let r = {
        let mut st = shared.medium.lock();
        st.transmit(shared.side, &iq)
    };
    shared.medium.notify();
    match r {
        Ok(h) => {
            debug!("transmitted {} samples as {} blocks", h.samples, h.l_tx);
            reply(shared, w, &Response::Success)
        }
        Err(e) => reply(shared, w, &Response::Error(core_error(&e))),
    }
}
