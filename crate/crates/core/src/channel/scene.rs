use std::collections::BTreeMap;
use std::str::FromStr;

use super::codebook::{check_band, steering_angle_deg};
use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `20 log10(4π d f / c)`.
pub fn fspl_db(distance_m: f64, carrier_hz: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * distance_m * carrier_hz / SPEED_OF_LIGHT).log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub azimuth_tx_deg: f64,
    pub azimuth_rx_deg: f64,
    /// Relative to free-space spreading at the link distance.
    pub gain_db: f64,
    pub delay_samples: usize,
}

impl Path {
    /// Line of sight towards codebook entry 32 on both sides. Entries 31
    /// and 32 straddle 0°, so a LOS at exactly 0° would tie them.
    pub fn los() -> Self {
        let az = steering_angle_deg(32);
        Path { azimuth_tx_deg: az, azimuth_rx_deg: az, gain_db: 0.0, delay_samples: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScene {
    pub distance_m: f64,
    pub paths: Vec<Path>,
    pub carrier_hz: f64,
    /// Complex noise power per sample, full scale = 1.
    pub noise_psd: f64,
    pub cfo_hz: f64,
    /// Clip level per component, full scale = 1.
    pub rx_clip: f64,
    /// Lumped transmit power, cable and conversion gain.
    pub link_gain_db: f64,
    pub tx_gain_db: f64,
    pub rx_gain_db: f64,
    pub f_sample: f64,
    pub seed: u64,
}

/// Calibrated so that boresight at 9.75 m and 60.48 GHz lands near
/// −20 dBFS for a −14 dBFS transmit signal.
pub const DEFAULT_LINK_GAIN_DB: f64 = 33.9;
pub const DEFAULT_NOISE_DBFS: f64 = -50.0;

impl Default for ChannelScene {
    fn default() -> Self {
        ChannelScene {
            distance_m: 9.75,
            paths: vec![Path::los()],
            carrier_hz: 60.48e9,
            noise_psd: 10f64.powf(DEFAULT_NOISE_DBFS / 10.0),
            cfo_hz: 0.0,
            rx_clip: 1.0,
            link_gain_db: DEFAULT_LINK_GAIN_DB,
            tx_gain_db: 0.0,
            rx_gain_db: 0.0,
            f_sample: 1.536e9,
            seed: 0,
        }
    }
}

impl ChannelScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.distance_m > 0.0) {
            return Err(Error::param("distance must be positive"));
        }
        if self.paths.is_empty() {
            return Err(Error::param("scene needs at least one path"));
        }
        check_band(self.carrier_hz)?;
        if !(self.noise_psd >= 0.0) || !(self.rx_clip > 0.0) || !(self.f_sample > 0.0) {
            return Err(Error::param("noise, clip level and sample rate must be non-negative"));
        }
        for p in &self.paths {
            if !(-90.0..=90.0).contains(&p.azimuth_tx_deg) || !(-90.0..=90.0).contains(&p.azimuth_rx_deg) {
                return Err(Error::param("path azimuth outside ±90°"));
            }
        }
        Ok(())
    }

    pub fn noise_dbfs(&self) -> f64 {
        10.0 * self.noise_psd.log10()
    }

    pub fn set_noise_dbfs(&mut self, dbfs: f64) {
        self.noise_psd = 10f64.powf(dbfs / 10.0);
    }

    pub fn fspl_db(&self) -> f64 {
        fspl_db(self.distance_m, self.carrier_hz)
    }
}

/// A parsed scene file: `[scene]` keys, repeated `[path]` sections and any
/// other sections left for the caller.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneFile {
    pub scene: ChannelScene,
    pub extra: BTreeMap<String, BTreeMap<String, String>>,
}

impl FromStr for SceneFile {
    type Err = Error;

    /// ```text
    /// [scene]
    /// distance_m = 9.75
    /// carrier_hz = 60.48e9
    /// noise_dbfs = -50
    ///
    /// [path]
    /// azimuth_tx_deg = 0.714
    /// azimuth_rx_deg = 0.714
    /// ```
    fn from_str(text: &str) -> Result<Self> {
        let mut scene = ChannelScene { paths: Vec::new(), ..ChannelScene::default() };
        let mut extra: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: String| Error::Parse { line: idx + 1, reason };
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_ascii_lowercase();
                if section == "path" {
                    scene.paths.push(Path { azimuth_tx_deg: 0.0, azimuth_rx_deg: 0.0, gain_db: 0.0, delay_samples: 0 });
                }
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim().to_ascii_lowercase(), v.trim()))
                .ok_or_else(|| err("expected key = value".into()))?;
            let num = || value.parse::<f64>().map_err(|_| err(format!("{key}: bad number {value:?}")));
            match section.as_str() {
                "scene" => match key.as_str() {
                    "distance_m" => scene.distance_m = num()?,
                    "carrier_hz" => scene.carrier_hz = num()?,
                    "noise_psd" => scene.noise_psd = num()?,
                    "noise_dbfs" => scene.set_noise_dbfs(num()?),
                    "cfo_hz" => scene.cfo_hz = num()?,
                    "rx_clip" => scene.rx_clip = num()?,
                    "link_gain_db" => scene.link_gain_db = num()?,
                    "tx_gain_db" => scene.tx_gain_db = num()?,
                    "rx_gain_db" => scene.rx_gain_db = num()?,
                    "f_sample" => scene.f_sample = num()?,
                    "seed" => scene.seed = value.parse().map_err(|_| err(format!("seed: bad integer {value:?}")))?,
                    _ => return Err(err(format!("unknown scene key {key:?}"))),
                },
                "path" => {
                    let p = scene.paths.last_mut().expect("section opened a path");
                    match key.as_str() {
                        "azimuth_tx_deg" => p.azimuth_tx_deg = num()?,
                        "azimuth_rx_deg" => p.azimuth_rx_deg = num()?,
                        "gain_db" => p.gain_db = num()?,
                        "delay_samples" => {
                            p.delay_samples = value.parse().map_err(|_| err(format!("bad delay {value:?}")))?
                        }
                        _ => return Err(err(format!("unknown path key {key:?}"))),
                    }
                }
                "" => return Err(err("key outside a section".into())),
                other => {
                    extra.entry(other.to_string()).or_default().insert(key, value.to_string());
                }
            }
        }
        if scene.paths.is_empty() {
            scene.paths.push(Path::los());
        }
        scene.validate()?;
        Ok(SceneFile { scene, extra })
    }
}
