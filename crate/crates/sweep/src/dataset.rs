//! Versioned container for captured transfers.
//!
//! ```text
//! MMSDR-DATASET 1
//! generator mmsdr-sweep 0.1.0
//! seed 7
//! config distances_m=9.75 carriers_hz=60480000000 ...
//! scene distance_m=9.75 ...
//! records 2
//! end
//! record carrier_hz=60480000000 distance_m=9.75 rx_awv=32 transfer=0 samples=1580
//! <samples · 4 bytes of little-endian int16 I, Q>
//! ...
//! ```
//!
//! Floats are written in shortest round-trip form, so reading back is exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mmsdr_core::channel::ChannelScene;
use mmsdr_core::dsp::{iq_from_bytes, iq_to_bytes};
use mmsdr_core::PpduModem;

use crate::analysis::SweepRecord;
use crate::config::SweepConfig;
use crate::error::{Result, SweepError};

pub const MAGIC: &str = "MMSDR-DATASET";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHeader {
    pub version: u32,
    pub generator: String,
    pub seed: u64,
    pub config: String,
    pub scene: String,
}

impl DatasetHeader {
    pub fn new(config: &SweepConfig, scene: &ChannelScene) -> Self {
        DatasetHeader {
            version: FORMAT_VERSION,
            generator: format!("mmsdr-sweep {}", env!("CARGO_PKG_VERSION")),
            seed: config.seed,
            config: config.to_string(),
            scene: scene_echo(scene),
        }
    }
}

/// Single-line description of a scene.
pub fn scene_echo(s: &ChannelScene) -> String {
    let paths: Vec<String> = s
        .paths
        .iter()
        .map(|p| format!("{}/{}/{}/{}", p.azimuth_tx_deg, p.azimuth_rx_deg, p.gain_db, p.delay_samples))
        .collect();
    format!(
        "distance_m={} carrier_hz={} noise_dbfs={} cfo_hz={} rx_clip={} link_gain_db={} tx_gain_db={} rx_gain_db={} f_sample={} seed={} paths={}",
        s.distance_m,
        s.carrier_hz,
        s.noise_dbfs(),
        s.cfo_hz,
        s.rx_clip,
        s.link_gain_db,
        s.tx_gain_db,
        s.rx_gain_db,
        s.f_sample,
        s.seed,
        paths.join(";")
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub records: Vec<SweepRecord>,
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

pub fn write_dataset_to(w: &mut impl Write, header: &DatasetHeader, records: &[SweepRecord]) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {}", header.version)?;
    writeln!(w, "generator {}", one_line(&header.generator))?;
    writeln!(w, "seed {}", header.seed)?;
    writeln!(w, "config {}", one_line(&header.config))?;
    writeln!(w, "scene {}", one_line(&header.scene))?;
    writeln!(w, "records {}", records.len())?;
    writeln!(w, "end")?;
    for r in records {
        writeln!(
            w,
            "record carrier_hz={} distance_m={} rx_awv={} transfer={} samples={}",
            r.carrier_hz,
            r.distance_m,
            r.rx_awv,
            r.transfer_index,
            r.iq.len()
        )?;
        w.write_all(&iq_to_bytes(&r.iq))?;
    }
    w.flush()
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, records: &[SweepRecord]) -> Result<()> {
    let f = File::create(path).map_err(|e| SweepError::io(path, e))?;
    write_dataset_to(&mut BufWriter::new(f), header, records).map_err(|e| SweepError::io(path, e))
}

fn bad(msg: impl Into<String>) -> SweepError {
    SweepError::Dataset(msg.into())
}

fn line(r: &mut impl BufRead) -> Result<String> {
    let mut s = String::new();
    let n = r.read_line(&mut s).map_err(|e| bad(e.to_string()))?;
    if n == 0 {
        return Err(bad("unexpected end of file"));
    }
    Ok(s.trim_end_matches(['\n', '\r']).to_string())
}

fn field<'a>(l: &'a str, key: &str) -> Result<&'a str> {
    l.strip_prefix(key).and_then(|r| r.strip_prefix(' ')).ok_or_else(|| bad(format!("expected {key:?}, got {l:?}")))
}

fn parse<T: std::str::FromStr>(what: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| bad(format!("{what}: bad value {v:?}")))
}

/// Reads a dataset and re-runs the transfer analysis with `modem`.
pub fn read_dataset_from(r: &mut impl BufRead, modem: &PpduModem) -> Result<Dataset> {
    let first = line(r)?;
    let version = field(&first, MAGIC).map_err(|_| bad("not a dataset file"))?;
    let version: u32 = parse("version", version)?;
    if version != FORMAT_VERSION {
        return Err(bad(format!("format version {version}, this build reads {FORMAT_VERSION}")));
    }
    let generator = field(&line(r)?, "generator")?.to_string();
    let seed = parse("seed", field(&line(r)?, "seed")?)?;
    let config = field(&line(r)?, "config")?.to_string();
    let scene = field(&line(r)?, "scene")?.to_string();
    let count: usize = parse("records", field(&line(r)?, "records")?)?;
    if line(r)? != "end" {
        return Err(bad("missing header terminator"));
    }
    let mut records = Vec::with_capacity(count);
    for k in 0..count {
        let meta = line(r)?;
        let rest = field(&meta, "record")?;
        let mut kv = std::collections::BTreeMap::new();
        for t in rest.split_whitespace() {
            let (a, b) = t.split_once('=').ok_or_else(|| bad(format!("record {k}: bad field {t:?}")))?;
            kv.insert(a, b);
        }
        let get = |name: &str| kv.get(name).copied().ok_or_else(|| bad(format!("record {k}: missing {name}")));
        let samples: usize = parse("samples", get("samples")?)?;
        let mut buf = vec![0u8; samples * 4];
        r.read_exact(&mut buf).map_err(|_| bad(format!("record {k}: truncated samples")))?;
        records.push(SweepRecord::new(
            modem,
            parse("carrier_hz", get("carrier_hz")?)?,
            parse("distance_m", get("distance_m")?)?,
            parse("rx_awv", get("rx_awv")?)?,
            parse("transfer", get("transfer")?)?,
            iq_from_bytes(&buf)?,
        )?);
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail).map_err(|e| bad(e.to_string()))? != 0 {
        return Err(bad("trailing bytes after the last record"));
    }
    Ok(Dataset { header: DatasetHeader { version, generator, seed, config, scene }, records })
}

pub fn read_dataset(path: &Path, modem: &PpduModem) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| SweepError::io(path, e))?;
    read_dataset_from(&mut BufReader::new(f), modem)
}
