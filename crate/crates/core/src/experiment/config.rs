use std::fmt;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::adaptive::{LmsSchedule, PreemphasisSettings};
use crate::dmt::DmtConfig;
use crate::evaluate::LatencyModel;
use crate::link::{nearest_preset, preset, DEFAULT_ROP_DBM};
use crate::pam::Detector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Dmt,
    NyquistPam4,
    PrPam4,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Format::Dmt => "dmt",
            Format::NyquistPam4 => "nyquist_pam4",
            Format::PrPam4 => "pr_pam4",
        }
    }
}

/// Changes applied on top of the named channel preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fiber_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attenuation_db_per_km: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub launch_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adc_noise_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation_knee: Option<f64>,
    /// `false` removes the receiver compression.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturation: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eml_bias_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eml_swing_v: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eml_dip: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clock_notch: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub preset: String,
    #[serde(default = "default_rops")]
    pub rop_dbm: Vec<f64>,
    #[serde(default, skip_serializing_if = "is_default_overrides")]
    pub overrides: ChannelOverrides,
}

fn default_rops() -> Vec<f64> {
    vec![DEFAULT_ROP_DBM]
}

fn is_default_overrides(o: &ChannelOverrides) -> bool {
    *o == ChannelOverrides::default()
}

/// Settings of both single-carrier chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PamSection {
    /// Pre-emphasis taps; 0 disables it.
    pub tx_taps: usize,
    pub rx_taps: usize,
    pub detector: Detector,
    pub preemphasis_mu: f64,
    pub preemphasis_passes: usize,
    pub mu_training: f64,
    pub mu_tracking: f64,
    /// Leading fraction of each block used for data-aided LMS training.
    pub training_fraction: f64,
    pub training_passes: usize,
    /// Pre-distort the symbol levels for the modulator curve.
    pub level_adjust: bool,
    pub clipping_ratio_db: Option<f64>,
    pub beta: f64,
    pub dac_bits: u32,
    pub clock_recovery: bool,
    pub traceback: usize,
    /// Order of the 4-ary de Bruijn payload (4^order symbols per block).
    pub payload_order: usize,
}

impl PamSection {
    pub fn defaults_for(format: Format) -> Self {
        let pr = format == Format::PrPam4;
        let pre = PreemphasisSettings::default();
        let lms = LmsSchedule::default();
        Self {
            tx_taps: 11,
            rx_taps: if pr { 21 } else { 41 },
            detector: if pr {
                Detector::Mlse { memory: 1 }
            } else {
                Detector::Slicer
            },
            preemphasis_mu: pre.mu,
            preemphasis_passes: pre.passes,
            mu_training: lms.mu_training,
            mu_tracking: lms.mu_tracking,
            training_fraction: lms.training_fraction,
            training_passes: lms.training_passes,
            level_adjust: true,
            clipping_ratio_db: None,
            beta: 0.1,
            dac_bits: 8,
            clock_recovery: true,
            traceback: 32,
            payload_order: 8,
        }
    }

    /// Receiver LMS schedule with `rx_taps` taps.
    pub fn schedule(&self) -> LmsSchedule {
        LmsSchedule {
            n_taps: self.rx_taps,
            mu_training: self.mu_training,
            mu_tracking: self.mu_tracking,
            training_fraction: self.training_fraction,
            training_passes: self.training_passes,
            ..LmsSchedule::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmtSection {
    #[serde(flatten)]
    pub modem: DmtConfig,
    #[serde(default = "default_frames_per_block")]
    pub frames_per_block: usize,
}

fn default_frames_per_block() -> usize {
    2
}

impl Default for DmtSection {
    fn default() -> Self {
        Self {
            modem: DmtConfig::default(),
            frames_per_block: default_frames_per_block(),
        }
    }
}

/// Parameter paths that a sweep axis may vary.
pub const SWEEP_KEYS: [&str; 13] = [
    "bit_rate",
    "pam.tx_taps",
    "pam.rx_taps",
    "pam.mlse_memory",
    "pam.clipping_ratio_db",
    "dmt.clipping_ratio_db",
    "dmt.fft_length",
    "channel.overrides.fiber_km",
    "channel.overrides.saturation_knee",
    "channel.overrides.noise_std",
    "channel.overrides.adc_noise_std",
    "channel.overrides.eml_swing_v",
    "channel.overrides.eml_bias_v",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub x: SweepAxis,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<SweepAxis>,
}

impl SweepSection {
    pub fn axes(&self) -> Vec<&SweepAxis> {
        std::iter::once(&self.x).chain(self.y.as_ref()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub format: Format,
    pub bit_rate: f64,
    pub seed: u64,
    pub blocks: usize,
    /// XOR the de Bruijn payload with PRBS31.
    pub scramble: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub channel: ChannelSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pam: Option<PamSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dmt: Option<DmtSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    pub latency: LatencyModel,
}

/// Every problem found in a config file, each prefixed with its key path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub errors: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.errors.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

const TOP_KEYS: [&str; 12] = [
    "name", "format", "bit_rate", "seed", "blocks", "scramble", "output_dir", "channel", "pam", "dmt", "sweep", "latency",
];

fn section<T: for<'de> Deserialize<'de>>(table: &Table, key: &str, errors: &mut Vec<String>) -> Option<T> {
    let v = table.get(key)?;
    match v.clone().try_into::<T>() {
        Ok(t) => Some(t),
        Err(e) => {
            errors.push(format!("{key}: {}", e.message().trim()));
            None
        }
    }
}

/// PAM fields may be left out; missing ones take the per-format defaults.
fn pam_section(table: &Table, format: Format, errors: &mut Vec<String>) -> Option<PamSection> {
    let mut merged = match Value::try_from(PamSection::defaults_for(format)) {
        Ok(Value::Table(t)) => t,
        _ => Table::new(),
    };
    if let Some(v) = table.get("pam") {
        let Some(user) = v.as_table() else {
            errors.push("pam: expected a table".into());
            return None;
        };
        for (k, v) in user {
            merged.insert(k.clone(), v.clone());
        }
    }
    let mut wrapper = Table::new();
    wrapper.insert("pam".into(), Value::Table(merged));
    section(&wrapper, "pam", errors)
}

/// Where a swept parameter would be set directly in the file.
fn fixed_path(sweep_key: &str) -> &str {
    match sweep_key {
        "pam.mlse_memory" => "pam.detector",
        k => k,
    }
}

fn lookup<'a>(table: &'a Table, path: &str) -> Option<&'a Value> {
    let mut parts = path.split('.');
    let mut v = table.get(parts.next()?)?;
    for p in parts {
        v = v.as_table()?.get(p)?;
    }
    Some(v)
}

impl ExperimentConfig {
    /// Parses and validates a config; reports every problem at once.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: Table = toml::from_str(text).map_err(|e| ConfigError {
            errors: vec![format!("syntax: {}", e.message().trim())],
        })?;
        let mut errors = Vec::new();
        for key in table.keys() {
            if !TOP_KEYS.contains(&key.as_str()) {
                let near = TOP_KEYS
                    .iter()
                    .max_by(|a, b| strsim::jaro_winkler(key, a).total_cmp(&strsim::jaro_winkler(key, b)))
                    .copied()
                    .unwrap_or("");
                errors.push(format!("{key}: unknown key (did you mean `{near}`?)"));
            }
        }
        let format: Option<Format> = match table.get("format") {
            None => {
                errors.push("format: missing (one of dmt, nyquist_pam4, pr_pam4)".into());
                None
            }
            Some(_) => section(&table, "format", &mut errors),
        };
        let name: String = section(&table, "name", &mut errors).unwrap_or_default();
        let bit_rate: f64 = section(&table, "bit_rate", &mut errors).unwrap_or(112e9);
        let seed: u64 = section::<i64>(&table, "seed", &mut errors).map(|s| s as u64).unwrap_or(1);
        let blocks: usize = section::<i64>(&table, "blocks", &mut errors)
            .map(|b| b.max(0) as usize)
            .unwrap_or(8);
        let scramble: bool = section(&table, "scramble", &mut errors).unwrap_or(true);
        let output_dir: Option<String> = section(&table, "output_dir", &mut errors);
        let channel: Option<ChannelSection> = match table.get("channel") {
            None => {
                errors.push("channel: missing section with a `preset` key".into());
                None
            }
            Some(_) => section(&table, "channel", &mut errors),
        };
        let sweep: Option<SweepSection> = section(&table, "sweep", &mut errors);
        let latency: LatencyModel = section(&table, "latency", &mut errors).unwrap_or_default();

        let (pam, dmt) = match format {
            Some(Format::Dmt) => {
                if table.contains_key("pam") {
                    errors.push("pam: section does not apply to format dmt".into());
                }
                let dmt: Option<DmtSection> = if table.contains_key("dmt") {
                    section(&table, "dmt", &mut errors)
                } else {
                    Some(DmtSection::default())
                };
                (None, dmt)
            }
            Some(f) => {
                if table.contains_key("dmt") {
                    errors.push(format!("dmt: section does not apply to format {}", f.name()));
                }
                (pam_section(&table, f, &mut errors), None)
            }
            None => (None, None),
        };

        if let Some(s) = &sweep {
            for (axis, a) in [("x", Some(&s.x)), ("y", s.y.as_ref())] {
                let Some(a) = a else { continue };
                if !SWEEP_KEYS.contains(&a.key.as_str()) {
                    errors.push(format!(
                        "sweep.{axis}.key: `{}` cannot be swept (choose from {})",
                        a.key,
                        SWEEP_KEYS.join(", ")
                    ));
                }
                if a.values.is_empty() {
                    errors.push(format!("sweep.{axis}.values: needs at least one value"));
                }
                let fixed = fixed_path(&a.key);
                if lookup(&table, fixed).is_some() {
                    errors.push(format!("sweep.{axis}.key: `{}` is swept and also fixed at `{fixed}`", a.key));
                }
            }
            if s.y.as_ref().is_some_and(|y| y.key == s.x.key) {
                errors.push("sweep.y.key: same key as sweep.x.key".into());
            }
        }

        let cfg = match (format, channel) {
            (Some(format), Some(channel)) if errors.is_empty() => ExperimentConfig {
                name,
                format,
                bit_rate,
                seed,
                blocks,
                scramble,
                output_dir,
                channel,
                pam,
                dmt,
                sweep,
                latency,
            },
            _ => return Err(ConfigError { errors }),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Semantic checks on an already typed config.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        if preset(&self.channel.preset).is_none() {
            errors.push(format!(
                "channel.preset: unknown preset `{}` (nearest: `{}`)",
                self.channel.preset,
                nearest_preset(&self.channel.preset)
            ));
        }
        if self.channel.rop_dbm.is_empty() {
            errors.push("channel.rop_dbm: needs at least one value".into());
        }
        if self.channel.rop_dbm.iter().any(|r| !r.is_finite()) {
            errors.push("channel.rop_dbm: values must be finite".into());
        }
        if self.blocks == 0 {
            errors.push("blocks: must be >= 1".into());
        }
        if !(self.bit_rate > 0.0) {
            errors.push("bit_rate: must be > 0".into());
        }
        if let Some(d) = &self.dmt {
            if let Err(e) = d.modem.validate() {
                errors.push(format!("dmt: {e}"));
            }
            if d.frames_per_block == 0 {
                errors.push("dmt.frames_per_block: must be >= 1".into());
            }
        }
        if let Some(p) = &self.pam {
            if p.tx_taps > 0 && p.tx_taps % 2 == 0 {
                errors.push(format!("pam.tx_taps: {} must be odd or 0", p.tx_taps));
            }
            if p.rx_taps % 2 == 0 {
                errors.push(format!("pam.rx_taps: {} must be odd", p.rx_taps));
            }
            if let Err(e) = p.schedule().validate() {
                errors.push(format!("pam: {e}"));
            }
            if let Detector::Mlse { memory } = p.detector {
                if memory == 0 || memory > crate::adaptive::MAX_MEMORY {
                    errors.push(format!("pam.detector.memory: {memory} outside 1..={}", crate::adaptive::MAX_MEMORY));
                }
            }
            if !(2..=8).contains(&p.payload_order) {
                errors.push(format!("pam.payload_order: {} outside 2..=8", p.payload_order));
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { errors })
        }
    }

    /// Serializes with swept parameters left out, so the text parses back.
    pub fn to_toml(&self) -> String {
        let Ok(Value::Table(mut table)) = Value::try_from(self) else {
            unreachable!("config serializes to a table")
        };
        for axis in self.sweep.iter().flat_map(|s| s.axes()) {
            let path: Vec<&str> = fixed_path(&axis.key).split('.').collect();
            let (last, parents) = path.split_last().expect("non-empty key");
            let mut t = Some(&mut table);
            for p in parents {
                t = t.and_then(|t| t.get_mut(*p)).and_then(Value::as_table_mut);
            }
            if let Some(t) = t {
                t.remove(*last);
            }
        }
        toml::to_string(&table).expect("table serializes")
    }
}
