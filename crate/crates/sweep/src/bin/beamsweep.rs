use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use mmsdr_core::airframe::{make_golay, make_template, make_test_waveform, make_trigger_waveform, PpduConfig, GOLAY_LEN};
use mmsdr_core::channel::{ChannelScene, SceneFile};
use mmsdr_core::detector::DetectorConfig;
use mmsdr_core::dsp::{iq_from_bytes, iq_to_bytes, quantize, IqBlock, IqSample};
use mmsdr_core::plsim::PlConfig;
use mmsdr_core::{DetectorBank, LinkMeasurement, R};
use mmsdr_node::{serve, Medium, NodeClient, NodeConfig, Side};
use mmsdr_sweep::dataset::{read_dataset, write_dataset, DatasetHeader};
use mmsdr_sweep::experiment::{run_campaign, run_sweep, CLIENT_IO_TIMEOUT};
use mmsdr_sweep::{FrameBuilder, SnrMatrix, SweepConfig, SweepError, SweepRecord};

#[derive(Parser)]
#[command(name = "beamsweep", version, about = "Simulated 60 GHz beam-sweeping testbed")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write x_SYNC, the detector template, the test waveform and the
    /// announcement frames.
    Synth {
        #[arg(long, default_value = "synth")]
        out_dir: PathBuf,
    },
    /// Run the trigger detector over a raw little-endian int16 IQ file.
    Detect {
        input: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        threshold: f64,
        /// Crossing position tolerance in clocks.
        #[arg(long, default_value_t = 0)]
        tolerance: usize,
    },
    /// Serve both radios of one simulated medium until interrupted.
    Node {
        #[arg(long)]
        scene: Option<PathBuf>,
        /// Mobile (transmitting) node control port; MMSDR_CONTROL_PORT
        /// overrides the default.
        #[arg(long)]
        control_port: Option<u16>,
        #[arg(long)]
        data_port: Option<u16>,
        /// Fixed (receiving) node ports.
        #[arg(long, default_value_t = 8082)]
        peer_control_port: u16,
        #[arg(long, default_value_t = 8083)]
        peer_data_port: u16,
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for per-node transcripts.
        #[arg(long)]
        transcript_dir: Option<PathBuf>,
    },
    /// Run the sweep campaign and write the dataset and SNR matrices.
    Sweep {
        #[arg(long)]
        scene: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated distances in metres.
        #[arg(long)]
        distances: Option<String>,
        /// Comma-separated carriers in Hz.
        #[arg(long)]
        carriers: Option<String>,
        #[arg(long)]
        tx_indices: Option<String>,
        #[arg(long)]
        rx_indices: Option<String>,
        #[arg(long)]
        s_rx: Option<usize>,
        /// Use running nodes (`host:control,data`) instead of an
        /// in-process testbed. Only the scene distance is swept.
        #[arg(long, requires = "fixed")]
        mobile: Option<String>,
        #[arg(long, requires = "mobile")]
        fixed: Option<String>,
    },
    /// Recompute SNR matrices, CFR and CIR from a dataset.
    Analyze {
        dataset: PathBuf,
        #[arg(long, default_value = "analysis")]
        out_dir: PathBuf,
    },
}

type Res<T> = Result<T, SweepError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Synth { out_dir } => synth(&out_dir),
        Cmd::Detect { input, threshold, tolerance } => detect(&input, threshold, tolerance),
        Cmd::Node { scene, control_port, data_port, peer_control_port, peer_data_port, seed, transcript_dir } => {
            node(scene.as_deref(), control_port, data_port, (peer_control_port, peer_data_port), seed, transcript_dir)
        }
        Cmd::Sweep { scene, out_dir, seed, distances, carriers, tx_indices, rx_indices, s_rx, mobile, fixed } => {
            let overrides = [
                ("distances_m", distances),
                ("carriers_hz", carriers),
                ("tx_indices", tx_indices),
                ("rx_indices", rx_indices),
                ("s_rx", s_rx.map(|v| v.to_string())),
                ("seed", seed.map(|v| v.to_string())),
            ];
            let overrides = overrides.into_iter().filter_map(|(k, v)| Some((k.to_string(), v?))).collect();
            sweep(scene.as_deref(), &out_dir, overrides, mobile.zip(fixed))
        }
        Cmd::Analyze { dataset, out_dir } => analyze(&dataset, &out_dir),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamsweep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn mkdir(dir: &Path) -> Res<()> {
    std::fs::create_dir_all(dir).map_err(|e| SweepError::io(dir, e))
}

fn write(path: &Path, data: impl AsRef<[u8]>) -> Res<()> {
    std::fs::write(path, data).map_err(|e| SweepError::io(path, e))
}

fn synth(out: &Path) -> Res<()> {
    mkdir(out)?;
    let g = make_golay(GOLAY_LEN)?;
    let x = make_trigger_waveform::<f64>(&g)?.x_sync;
    let q = quantize(&x);
    write(&out.join("x_sync.iq"), iq_to_bytes(&q.samples))?;
    let mut csv = String::from("n,re,im\n");
    for (n, v) in x.iter().enumerate() {
        let _ = writeln!(csv, "{n},{},{}", v.re, v.im);
    }
    write(&out.join("x_sync.csv"), csv)?;
    let t = make_template(&g)?;
    let taps: Vec<String> = t.b.iter().map(|v| v.to_string()).collect();
    write(&out.join("template.txt"), taps.join("\n") + "\n")?;
    let golay: String = g.g.iter().map(|v| v.to_string()).collect();
    write(&out.join("golay.txt"), golay + "\n")?;
    write(&out.join("test_waveform.iq"), iq_to_bytes(&quantize(&make_test_waveform::<f64>()).samples))?;
    let frames = FrameBuilder::new(PpduConfig::default())?;
    let fdir = out.join("frames");
    mkdir(&fdir)?;
    for i in 0..64u8 {
        write(&fdir.join(format!("frame_{i:02}.iq")), iq_to_bytes(frames.frame(i)))?;
    }
    info!("wrote x_SYNC ({} samples), template, test waveform and 64 frames to {}", x.len(), out.display());
    Ok(())
}

fn detect(input: &Path, threshold: f64, tolerance: usize) -> Res<()> {
    let bytes = std::fs::read(input).map_err(|e| SweepError::io(input, e))?;
    let samples = iq_from_bytes(&bytes)?;
    let t = make_template(&make_golay(GOLAY_LEN)?)?;
    let cfg = DetectorConfig { threshold, tolerance, ..DetectorConfig::default() };
    let mut bank = DetectorBank::with_config(&t, cfg);
    let mut padded = samples.clone();
    padded.resize(samples.len().div_ceil(R) * R, IqSample::ZERO);
    let mut triggers = 0;
    println!("sample_index,ppd_lag,metrics");
    for block in IqBlock::pack(&padded) {
        let out = bank.step(&block);
        if let Some(ev) = out.winner() {
            triggers += 1;
            let m: Vec<String> = ev.metric_values.iter().map(|v| format!("{v:.4}")).collect();
            println!("{},{},{}", ev.sample_index, ev.ppd_lag, m.join(" "));
        }
    }
    info!("{} samples, {triggers} triggers, N_detect {}", samples.len(), bank.n_detect());
    Ok(())
}

fn load_scene(path: Option<&Path>) -> Res<(ChannelScene, BTreeMap<String, BTreeMap<String, String>>)> {
    match path {
        None => Ok((ChannelScene::default(), BTreeMap::new())),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| SweepError::io(p, e))?;
            let f: SceneFile = text.parse()?;
            Ok((f.scene, f.extra))
        }
    }
}

fn node(
    scene: Option<&Path>,
    control: Option<u16>,
    data: Option<u16>,
    peer: (u16, u16),
    seed: Option<u64>,
    transcripts: Option<PathBuf>,
) -> Res<()> {
    let (mut scene, _) = load_scene(scene)?;
    if let Some(s) = seed {
        scene.seed = s;
    }
    let medium = Medium::new(scene, PlConfig::default())?;
    let mut mobile = NodeConfig { name: "mobile".into(), ..NodeConfig::default() }.with_env()?;
    if let Some(p) = control {
        mobile.control_port = p;
    }
    if let Some(p) = data {
        mobile.data_port = p;
    }
    let mut fixed = NodeConfig { name: "fixed".into(), control_port: peer.0, data_port: peer.1, ..NodeConfig::default() };
    if let Some(dir) = transcripts {
        mkdir(&dir)?;
        mobile.transcript = Some(dir.join("mobile.log"));
        fixed.transcript = Some(dir.join("fixed.log"));
    }
    let a = serve(&mobile, medium.clone(), Side::A)?;
    let b = serve(&fixed, medium, Side::B)?;
    println!("mobile control {} data {}", a.control_addr(), a.data_addr());
    println!("fixed  control {} data {}", b.control_addr(), b.data_addr());
    a.join();
    b.join();
    Ok(())
}

/// `host:control,data`.
fn connect(spec: &str) -> Res<NodeClient> {
    let bad = || SweepError::Config(format!("expected host:control,data, got {spec:?}"));
    let (host, ports) = spec.rsplit_once(':').ok_or_else(bad)?;
    let (c, d) = ports.split_once(',').ok_or_else(bad)?;
    let (c, d): (u16, u16) = (c.parse().map_err(|_| bad())?, d.parse().map_err(|_| bad())?);
    Ok(NodeClient::connect((host, c), (host, d), CLIENT_IO_TIMEOUT)?)
}

fn matrix_stem(fc: f64, d: f64) -> String {
    format!("snr_{:.2}GHz_{:.4}m", fc / 1e9, d)
}

fn sweep(
    scene: Option<&Path>,
    out: &Path,
    overrides: BTreeMap<String, String>,
    remote: Option<(String, String)>,
) -> Res<()> {
    let (scene, extra) = load_scene(scene)?;
    let mut cfg = SweepConfig { seed: scene.seed, ..SweepConfig::default() };
    if let Some(s) = extra.get("sweep") {
        cfg.apply_section(s)?;
    }
    cfg.apply_section(&overrides)?;
    mkdir(out)?;
    let frames = FrameBuilder::new(PpduConfig::default())?;
    let outcomes = match remote {
        None => run_campaign(&scene, &cfg, &PlConfig::default(), &frames)?,
        Some((m, f)) => {
            let (mut tx, mut rx) = (connect(&m)?, connect(&f)?);
            let mut v = Vec::new();
            for &fc in &cfg.carriers_hz {
                v.push(run_sweep(&mut tx, &mut rx, &cfg, &frames, fc, scene.distance_m, None)?);
            }
            v
        }
    };
    let mut summary = String::from("carrier_hz,distance_m,pairs_decoded,best_tx,best_rx,best_snr_db\n");
    let mut records: Vec<SweepRecord> = Vec::new();
    for o in outcomes {
        o.matrix.write_csv(out, &matrix_stem(o.carrier_hz, o.distance_m))?;
        let (bt, br, bs) = o.matrix.argmax().map_or((String::new(), String::new(), String::new()), |(t, r, s)| {
            (t.to_string(), r.to_string(), format!("{s:.3}"))
        });
        let _ = writeln!(summary, "{},{},{},{bt},{br},{bs}", o.carrier_hz, o.distance_m, o.matrix.filled());
        records.extend(o.records);
    }
    write(&out.join("summary.csv"), summary)?;
    let path = out.join("dataset.mmsd");
    write_dataset(&path, &DatasetHeader::new(&cfg, &scene), &records)?;
    info!("{} transfers written to {}", records.len(), path.display());
    Ok(())
}

fn write_measurement(out: &Path, stem: &str, m: &LinkMeasurement, cfg: &PpduConfig) -> Res<()> {
    let mut cfr = String::from("subcarrier,re,im,mag_db\n");
    for (k, h) in cfg.subcarriers().iter().zip(&m.cfr) {
        let _ = writeln!(cfr, "{k},{},{},{:.3}", h.re, h.im, 10.0 * h.norm_sqr().max(1e-30).log10());
    }
    write(&out.join(format!("{stem}_cfr.csv")), cfr)?;
    let mut cir = String::from("lag,re,im,mag\n");
    for (n, h) in m.cir.iter().enumerate() {
        let _ = writeln!(cir, "{n},{},{},{}", h.re, h.im, h.norm());
    }
    write(&out.join(format!("{stem}_cir.csv")), cir)
}

fn analyze(dataset: &Path, out: &Path) -> Res<()> {
    let cfg = PpduConfig::default();
    let frames = FrameBuilder::new(cfg.clone())?;
    let ds = read_dataset(dataset, frames.modem())?;
    mkdir(out)?;
    // (carrier, distance) in order of first appearance
    let mut points: Vec<((u64, u64), SnrMatrix, Option<(f64, usize)>)> = Vec::new();
    let mut transfers = String::from("carrier_hz,distance_m,rx_awv,transfer,tx_awv,snr_db,timing_offset,failure\n");
    for (k, r) in ds.records.iter().enumerate() {
        let key = (r.carrier_hz.to_bits(), r.distance_m.to_bits());
        let pos = match points.iter().position(|p| p.0 == key) {
            Some(p) => p,
            None => {
                points.push((key, SnrMatrix::new(), None));
                points.len() - 1
            }
        };
        let a = &r.analysis;
        let _ = writeln!(
            transfers,
            "{},{},{},{},{},{},{},{}",
            r.carrier_hz,
            r.distance_m,
            r.rx_awv,
            r.transfer_index,
            a.tx_awv_index.map_or(String::new(), |v| v.to_string()),
            a.snr_db.map_or(String::new(), |v| format!("{v:.3}")),
            a.timing_offset,
            a.failure.as_ref().map_or(String::new(), |f| format!("{f:?}").to_lowercase())
        );
        if let Some((t, snr)) = r.decoded() {
            let p = &mut points[pos];
            p.1.set(t as usize, r.rx_awv as usize, snr);
            if p.2.is_none_or(|(best, _)| snr > best) {
                p.2 = Some((snr, k));
            }
        }
    }
    write(&out.join("transfers.csv"), transfers)?;
    for ((fc, d), m, best) in &points {
        let stem = matrix_stem(f64::from_bits(*fc), f64::from_bits(*d));
        m.write_csv(out, &stem)?;
        if let Some((_, k)) = best {
            write_measurement(out, &format!("{stem}_best"), &ds.records[*k].analysis, &cfg)?;
        }
    }
    info!("{} transfers, {} matrices written to {}", ds.records.len(), points.len(), out.display());
    Ok(())
}
