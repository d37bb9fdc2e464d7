//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runtime budgets are part of each criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, ErrorKind as IoKind, Read, Write};
use std::net::TcpStream;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mmsdr_core::airframe::{make_golay, make_template, make_trigger_waveform, PpduConfig, TriggerTemplate};
use mmsdr_core::channel::{steering_angle_deg, ChannelScene, Path};
use mmsdr_core::dsp::{dequantize, iq_to_bytes, measure_null_to_null_bw, quantize, IqBlock, IqSample, R};
use mmsdr_core::plsim::{PlConfig, PlSim, RxMode};
use mmsdr_core::{DetectorBank, PolyphaseCorrelator, PpduModem, C64};
use mmsdr_node::{ErrorKind, Testbed};
use mmsdr_sweep::dataset::{write_dataset_to, DatasetHeader};
use mmsdr_sweep::{run_campaign, FrameBuilder, SweepConfig, SweepOutcome};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn template() -> TriggerTemplate {
    make_template(&make_golay(32).unwrap()).unwrap()
}

fn xsync() -> Vec<C64> {
    make_trigger_waveform::<f64>(&make_golay(32).unwrap()).unwrap().x_sync
}

fn cnoise(rng: &mut impl Rng, power: f64) -> C64 {
    let s = (power / 2.0).sqrt();
    C64::new(rng.sample::<f64, _>(StandardNormal) * s, rng.sample::<f64, _>(StandardNormal) * s)
}

fn power(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Winning `(sample_index, lag)` per trigger of a fresh bank.
fn decisions(samples: &[IqSample]) -> Vec<(u64, usize)> {
    let mut bank = DetectorBank::new(&template());
    let mut padded = samples.to_vec();
    padded.resize(samples.len().div_ceil(R) * R, IqSample::ZERO);
    IqBlock::pack(&padded)
        .iter()
        .filter_map(|b| bank.step(b).winner().map(|e| (e.sample_index, e.ppd_lag)))
        .collect()
}

fn c1_polyphase_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let n = 100_000;
    let x: Vec<IqSample> = (0..n).map(|_| IqSample::new(rng.random(), rng.random())).collect();
    let t = template();
    let mut poly = PolyphaseCorrelator::new(&t);
    let got: Vec<C64> = IqBlock::pack(&x).iter().flat_map(|b| poly.step_iq(b)).collect();
    let raw: Vec<C64> = x.iter().map(|s| C64::new(s.i as f64, s.q as f64)).collect();
    for k in 0..n {
        let mut acc = C64::new(0.0, 0.0);
        for (j, &b) in t.b.iter().enumerate().take(k + 1) {
            acc += raw[k - j] * b as f64;
        }
        ensure!(got[k] == acc, "sample {k}: polyphase {} vs direct {acc}", got[k]);
    }
    Ok(format!("{n} samples bit-exact"))
}

fn c2_trigger_bandwidth() -> Outcome {
    let bw = measure_null_to_null_bw(&xsync(), 1.536e9).map_err(|e| e.to_string())?;
    let err = bw / 576e6 - 1.0;
    ensure!(err.abs() <= 0.05, "null-to-null bandwidth {:.1} MHz", bw / 1e6);
    Ok(format!("{:.1} MHz ({:+.2}%)", bw / 1e6, 100.0 * err))
}

/// Single-crossing probability per window for complex Gaussian input is
/// `(1 - 1/4)^127 ≈ 1.4e-16`; four exactly spaced crossings are rarer
/// still. The Monte-Carlo run at two noise levels over 10^7 samples saw
/// no event, so the frozen bound for 10^6 samples is zero.
const FALSE_ALARM_BOUND: usize = 0;

// the bound is a frozen oracle value and may be zero
#[allow(clippy::absurd_extreme_comparisons)]
fn c3_detection_rule() -> Outcome {
    let x = xsync();
    let p_sig = power(&x);
    let p_noise = p_sig / 10.0;
    let clean_start = 400;
    // noiseless declaration index for each phase
    let clean: Vec<u64> = (0..R)
        .map(|k| {
            let mut buf = vec![C64::new(0.0, 0.0); 1600];
            buf[clean_start + k..clean_start + k + x.len()].copy_from_slice(&x);
            decisions(&quantize(&buf).samples).first().map_or(u64::MAX, |d| d.0)
        })
        .collect();
    ensure!(clean.iter().all(|&c| c != u64::MAX), "noiseless trigger missed");
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let trials = 1000;
    let mut hits = 0;
    let mut lags = BTreeSet::new();
    for trial in 0..trials {
        let off = clean_start + trial % 8;
        let mut buf: Vec<C64> = (0..1600).map(|_| cnoise(&mut rng, p_noise)).collect();
        for (b, v) in buf[off..].iter_mut().zip(&x) {
            *b += v;
        }
        let expect = clean[trial % 8] as i64;
        let d = decisions(&quantize(&buf).samples);
        if let Some(&(n, lag)) = d.iter().find(|(n, _)| (*n as i64 - expect).abs() <= R as i64) {
            hits += 1;
            lags.insert((n as usize % R, lag));
        }
    }
    let rate = hits as f64 / trials as f64;
    ensure!(rate >= 0.99, "detected {hits}/{trials}");
    let covered: BTreeSet<usize> = lags.iter().map(|&(_, l)| l).collect();
    ensure!(covered.len() == R, "offsets covered {covered:?}");
    ensure!(lags.iter().all(|&(n, l)| n == l), "lag does not match sample phase: {lags:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(304);
    let noise: Vec<C64> = (0..1_000_000).map(|_| cnoise(&mut rng, p_noise)).collect();
    let fa = decisions(&quantize(&noise).samples).len();
    ensure!(fa <= FALSE_ALARM_BOUND, "{fa} false alarms in 10^6 samples");
    Ok(format!("{hits}/{trials} detected, lags {covered:?}, {fa} false alarms"))
}

fn c4_scale_invariance() -> Outcome {
    let x = xsync();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut scenes: Vec<Vec<C64>> = Vec::new();
    let mut clean = vec![C64::new(0.0, 0.0); 6000];
    clean[700..700 + x.len()].copy_from_slice(&x);
    clean[3301..3301 + x.len()].copy_from_slice(&x);
    scenes.push(clean.clone());
    scenes.push(clean.iter().map(|v| v + cnoise(&mut rng, 0.01)).collect());
    scenes.push((0..6000).map(|_| cnoise(&mut rng, 0.05)).collect());
    let mut checked = 0;
    for (s, scene) in scenes.iter().enumerate() {
        let base = decisions(&quantize(scene).samples);
        for e in 0..=6 {
            let a = 2f64.powi(-e);
            let scaled: Vec<C64> = scene.iter().map(|v| v * a).collect();
            let q = quantize(&scaled);
            ensure!(q.clipped == 0, "scene {s} clips at alpha 2^-{e}");
            let d = decisions(&q.samples);
            ensure!(d == base, "scene {s}, alpha 2^-{e}: {d:?} vs {base:?}");
            checked += 1;
        }
    }
    Ok(format!("{checked} scene/scale pairs agree"))
}

fn c5_buffer_mechanism() -> Outcome {
    let l_rx = 256;
    let mut pl = PlSim::new(PlConfig::default()).map_err(|e| e.to_string())?;
    pl.set_rx_mode(RxMode::Waveform).map_err(|e| e.to_string())?;
    pl.set_rx_enabled(true).map_err(|e| e.to_string())?;
    pl.wtr_configure(l_rx).map_err(|e| e.to_string())?;
    let d_th = pl.registers().d_th as usize;
    ensure!(d_th == l_rx * (32768 / l_rx), "D_th {d_th}");
    let trig = IqBlock::pack(&quantize(&xsync()).samples);
    let gap = l_rx + 64;
    let mut max_occ = 0;
    for _ in 0..200 {
        for b in trig.iter().chain(std::iter::repeat_n(&IqBlock::ZERO, gap)) {
            pl.clock_step(b);
            max_occ = max_occ.max(pl.adc_fifo().occupancy());
        }
    }
    let n = pl.n_trans();
    ensure!(n == 128, "N_trans {n}");
    ensure!(pl.adc_fifo().overflows() == 0, "{} overflows", pl.adc_fifo().overflows());
    ensure!(max_occ <= d_th, "occupancy peaked at {max_occ} > {d_th}");
    Ok(format!("N_trans {n}, peak occupancy {max_occ}/{d_th}, 0 overflows"))
}

fn c6_str_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut pl = PlSim::new(PlConfig::default()).map_err(|e| e.to_string())?;
    pl.set_rx_enabled(true).map_err(|e| e.to_string())?;
    let mut sizes: Vec<usize> = vec![1, 7, 8, 9, 1 << 18];
    while sizes.len() < 100 {
        sizes.push(rng.random_range(1..40_000));
    }
    let odd = sizes.iter().filter(|s| *s % R != 0).count();
    for &s_rx in &sizes {
        let stream: Vec<IqSample> = (0..s_rx + R).map(|_| IqSample::new(rng.random(), rng.random())).collect();
        let blocks = IqBlock::pack(&stream);
        let mut it = blocks.iter();
        let got = pl
            .str_receive(s_rx, || it.next().copied().unwrap_or(IqBlock::ZERO))
            .map_err(|e| e.to_string())?;
        ensure!(got.len() == s_rx, "S_rx {s_rx}: got {} samples", got.len());
        ensure!(got == stream[..s_rx], "S_rx {s_rx}: samples differ from the stream prefix");
    }
    Ok(format!("100 sizes ({odd} not multiples of 8) exact"))
}

struct Session {
    ctl: BufReader<TcpStream>,
    data: TcpStream,
    sent: BTreeSet<String>,
}

impl Session {
    fn open(ctl: std::net::SocketAddr, data: std::net::SocketAddr) -> Result<Self, String> {
        let c = TcpStream::connect(ctl).map_err(|e| e.to_string())?;
        let d = TcpStream::connect(data).map_err(|e| e.to_string())?;
        c.set_read_timeout(Some(Duration::from_secs(10))).map_err(|e| e.to_string())?;
        d.set_read_timeout(Some(Duration::from_secs(10))).map_err(|e| e.to_string())?;
        Ok(Session { ctl: BufReader::new(c), data: d, sent: BTreeSet::new() })
    }

    /// Sends one line, returns the single reply line after checking it
    /// is well formed.
    fn cmd(&mut self, line: &str) -> Result<String, String> {
        self.sent.insert(line.split_whitespace().next().unwrap_or("").to_string());
        self.ctl.get_mut().write_all(format!("{line}\n").as_bytes()).map_err(|e| e.to_string())?;
        let mut r = String::new();
        self.ctl.read_line(&mut r).map_err(|e| format!("{line}: {e}"))?;
        ensure!(r.ends_with('\n'), "{line}: unterminated reply {r:?}");
        let r = r.trim_end().to_string();
        ensure!(!r.is_empty(), "{line}: empty reply");
        if let Some(tok) = r.strip_prefix("error ") {
            ensure!(ErrorKind::from_token(tok).is_some(), "{line}: unknown error token {tok:?}");
        } else {
            ensure!(!r.starts_with("error"), "{line}: malformed error {r:?}");
        }
        Ok(r)
    }

    fn expect(&mut self, line: &str, want: &str) -> Result<(), String> {
        let r = self.cmd(line)?;
        ensure!(r == want, "{line}: replied {r:?}, expected {want:?}");
        Ok(())
    }

    fn read_data(&mut self, n: usize) -> Result<Vec<u8>, String> {
        let mut buf = vec![0u8; n];
        self.data.read_exact(&mut buf).map_err(|e| format!("data port: {e}"))?;
        Ok(buf)
    }

    /// Nothing further is pending on either connection.
    fn drained(&mut self) -> Result<(), String> {
        for s in [self.ctl.get_ref(), &self.data] {
            s.set_nonblocking(true).map_err(|e| e.to_string())?;
            let mut b = [0u8; 1];
            match (&*s).read(&mut b) {
                Err(e) if e.kind() == IoKind::WouldBlock => {}
                other => return Err(format!("unexpected trailing traffic: {other:?}")),
            }
            s.set_nonblocking(false).map_err(|e| e.to_string())?;
        }
        ensure!(self.ctl.buffer().is_empty(), "extra control lines buffered");
        Ok(())
    }
}

fn c7_api_conformance() -> Outcome {
    let tb = Testbed::start(ChannelScene::default(), PlConfig::default()).map_err(|e| e.to_string())?;
    let mut m = Session::open(tb.mobile.control_addr(), tb.mobile.data_addr())?;
    let mut f = Session::open(tb.fixed.control_addr(), tb.fixed.data_addr())?;

    let name = m.cmd("getFGPABitStreamFileName")?;
    ensure!(name.ends_with(".bit"), "bitstream name {name:?}");
    let regs = m.cmd("getRegisters")?;
    ensure!(regs.split_whitespace().count() == 11, "register dump {regs:?}");
    m.expect("getBeamIndexTX", "32")?;
    m.expect("setBeamIndexTX 32", "success")?;
    m.expect("getBeamIndexRX", "32")?;
    m.expect("setBeamIndexRX 31", "success")?;
    m.expect("getModeSiver", "RXen0_TXen0")?;
    m.expect("setModeSiver RXen0_TXen1", "RXen0_TXen1")?;
    m.expect("getGainTX", "80 80 80")?;
    m.expect("setGainTX 80 80 80", "success")?;
    m.expect("getGainRX", "80 80 80")?;
    m.expect("setGainRX 81 80 7F", "success")?;
    m.expect("getGainRX", "81 80 7F")?;
    let fc = m.cmd("getCarrierFrequency")?;
    ensure!(fc.parse::<f64>().ok() == Some(60.48e9), "carrier {fc:?}");
    m.expect("setCarrierFrequency 60.48e9", "success")?;
    m.expect("setBeamIndexTX 64", "error out-of-range")?;

    f.expect("setModeSiver RXen1_TXen0", "RXen1_TXen0")?;
    let s_rx = 2048;
    f.expect(&format!("setupReception 1 {s_rx}"), "success")?;
    f.expect("setTransferEnableRXFlag 1", "success")?;
    f.expect("getNumberOfAvailableTransfers", "0")?;

    let frames = FrameBuilder::new(PpduConfig::default()).map_err(|e| e.to_string())?;
    let n_tx = 3;
    for i in 0..n_tx {
        let fr = frames.frame(30 + i);
        m.sent.insert("transmitIQSamples".into());
        m.ctl.get_mut().write_all(format!("transmitIQSamples {}\n", fr.len()).as_bytes()).map_err(|e| e.to_string())?;
        m.data.write_all(&iq_to_bytes(fr)).map_err(|e| e.to_string())?;
        let mut r = String::new();
        m.ctl.read_line(&mut r).map_err(|e| e.to_string())?;
        ensure!(r == "success\n", "transmitIQSamples replied {r:?}");
    }
    f.expect("getNumberOfAvailableTransfers", &n_tx.to_string())?;
    f.expect(&format!("receiveIQSamples {n_tx} 2.0"), "success")?;
    let bytes = f.read_data(n_tx as usize * s_rx * 4)?;
    f.expect("getNumberOfAvailableTransfers", "0")?;
    f.expect("receiveIQSamples 1 0.05", "error timeout")?;

    // software-triggered, odd length
    f.expect("setupReception 0 1001", "success")?;
    f.expect("receiveIQSamples 2 1", "success")?;
    f.read_data(2 * 1001 * 4)?;

    m.drained()?;
    f.drained()?;
    let all: BTreeSet<String> = m.sent.union(&f.sent).cloned().collect();
    ensure!(all.len() == 19, "{} distinct commands exercised: {all:?}", all.len());
    Ok(format!("19 commands, {} data bytes for N_trans={n_tx}, S_rx={s_rx}", bytes.len()))
}

const SWEEP_S_RX: usize = 1472;
const SWEEP_SEED: u64 = 8;

fn reflection_scene() -> ChannelScene {
    let az = steering_angle_deg(13);
    let mut s = ChannelScene::default();
    s.paths.push(Path { azimuth_tx_deg: az, azimuth_rx_deg: az, gain_db: -6.0, delay_samples: 12 });
    s
}

fn sweep(scene: &ChannelScene) -> Result<(SweepOutcome, Vec<u8>), String> {
    let cfg = SweepConfig {
        distances_m: vec![scene.distance_m],
        carriers_hz: vec![60.48e9],
        s_rx: SWEEP_S_RX,
        seed: SWEEP_SEED,
        ..SweepConfig::default()
    };
    let frames = FrameBuilder::new(PpduConfig::default()).map_err(|e| e.to_string())?;
    let mut out = run_campaign(scene, &cfg, &PlConfig::default(), &frames).map_err(|e| e.to_string())?;
    let o = out.pop().ok_or("no sweep outcome")?;
    let mut bytes = Vec::new();
    write_dataset_to(&mut bytes, &DatasetHeader::new(&cfg, scene), &o.records).map_err(|e| e.to_string())?;
    Ok((o, bytes))
}

static DATASETS: OnceLock<(Vec<u8>, Vec<u8>)> = OnceLock::new();

fn check_sweep(o: &SweepOutcome) -> Result<(), String> {
    ensure!(o.duplicates == 0, "{} duplicate decodes", o.duplicates);
    ensure!(o.log_mismatches == 0, "{} RX steps disagree with the announcement log", o.log_mismatches);
    ensure!(o.matrix.filled() == o.decode_ok, "fill {} != decoded {}", o.matrix.filled(), o.decode_ok);
    ensure!(o.records.iter().all(|r| r.iq.len() == SWEEP_S_RX), "transfer length differs from S_rx");
    Ok(())
}

fn c8_end_to_end_sweep() -> Outcome {
    let los = ChannelScene::default();
    let refl = reflection_scene();
    let (a, b, r) = std::thread::scope(|s| {
        let a = s.spawn(|| sweep(&los));
        let b = s.spawn(|| sweep(&los));
        let r = s.spawn(|| sweep(&refl));
        (a.join().unwrap(), b.join().unwrap(), r.join().unwrap())
    });
    let (a, bytes_a) = a?;
    let (_, bytes_b) = b?;
    let (r, _) = r?;
    let _ = DATASETS.set((bytes_a, bytes_b));
    check_sweep(&a)?;
    check_sweep(&r)?;
    let (t, x, snr) = a.matrix.argmax().ok_or("LOS sweep decoded nothing")?;
    ensure!((t, x) == (32, 32), "LOS argmax at ({t},{x})");
    let (rt, rx, _) = r.matrix.argmax().ok_or("reflection sweep decoded nothing")?;
    ensure!((rt, rx) == (32, 32), "reflection scene argmax at ({rt},{rx})");
    let main_lobe = |i: usize| i.abs_diff(32) <= 5;
    let (st, sx, ssnr) = r
        .matrix
        .argmax_where(|t, x| !main_lobe(t) && !main_lobe(x))
        .ok_or("no decode outside the LOS main lobe")?;
    ensure!((st, sx) == (13, 13), "secondary maximum at ({st},{sx})");
    ensure!(r.matrix.is_local_max(13, 13), "(13,13) is not a local maximum");
    Ok(format!(
        "LOS argmax (32,32) {snr:.1} dB, {} pairs; ridge (13,13) {ssnr:.1} dB",
        a.matrix.filled()
    ))
}

fn c9_ppdu_calibration() -> Outcome {
    let modem = PpduModem::new(PpduConfig::default()).map_err(|e| e.to_string())?;
    let x = modem.encode(21).map_err(|e| e.to_string())?;
    let p_noise = power(&x) / 10f64.powf(2.5);
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let trials = 100;
    let mut sum = 0.0;
    for _ in 0..trials {
        let y: Vec<C64> = x.iter().map(|v| v + cnoise(&mut rng, p_noise)).collect();
        let m = modem.decode(&dequantize(&quantize(&y).samples)).map_err(|e| e.to_string())?;
        ensure!(m.tx_awv_index == Some(21), "decode failed at 25 dB: {:?}", m.failure);
        sum += m.snr_db.ok_or("no SNR")?;
    }
    let mean = sum / trials as f64;
    ensure!((mean - 25.0).abs() <= 1.5, "mean SNR {mean:.2} dB");
    let hot: Vec<C64> = x.iter().map(|v| v * 10.0).collect();
    let m = modem.decode(&dequantize(&quantize(&hot).samples)).map_err(|e| e.to_string())?;
    ensure!(!m.decode_ok(), "saturated PPDU decoded");
    Ok(format!("mean {mean:.2} dB over {trials} trials; +20 dB drive rejected as {:?}", m.failure))
}

fn c10_determinism() -> Outcome {
    let (a, b) = DATASETS.get().ok_or("criterion 8 did not produce datasets")?;
    ensure!(a == b, "datasets differ ({} vs {} bytes)", a.len(), b.len());
    Ok(format!("two runs, {} identical bytes", a.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "polyphase equivalence", budget: Duration::from_secs(5), run: c1_polyphase_equivalence },
    Criterion { id: 2, name: "trigger bandwidth", budget: Duration::from_secs(1), run: c2_trigger_bandwidth },
    Criterion { id: 3, name: "detection rule", budget: Duration::from_secs(60), run: c3_detection_rule },
    Criterion { id: 4, name: "scale invariance", budget: Duration::from_secs(10), run: c4_scale_invariance },
    Criterion { id: 5, name: "buffer mechanism", budget: Duration::from_secs(10), run: c5_buffer_mechanism },
    Criterion { id: 6, name: "STR exactness", budget: Duration::from_secs(10), run: c6_str_exactness },
    Criterion { id: 7, name: "API conformance", budget: Duration::from_secs(10), run: c7_api_conformance },
    Criterion { id: 8, name: "end-to-end sweep", budget: Duration::from_secs(600), run: c8_end_to_end_sweep },
    Criterion { id: 9, name: "PPDU calibration", budget: Duration::from_secs(30), run: c9_ppdu_calibration },
    Criterion { id: 10, name: "determinism", budget: Duration::from_secs(1), run: c10_determinism },
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        for c in CRITERIA {
            println!("criterion_{}: test", c.id);
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for c in CRITERIA {
        let t0 = Instant::now();
        let r = (c.run)();
        let dt = t0.elapsed();
        let r = match r {
            Ok(msg) if dt > c.budget => Err(format!("{msg}; over budget {:?}", c.budget)),
            r => r,
        };
        let (tag, msg) = match &r {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        println!("criterion {:>2} {:<22} {tag} {:>8.2}s  {msg}", c.id, c.name, dt.as_secs_f64());
        failed += usize::from(r.is_err());
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
