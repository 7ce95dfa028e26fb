use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ChannelOverrides, ExperimentConfig, Format, PamSection};
use crate::adaptive::{observe_through, train_preemphasis, FfeTaps};
use crate::dmt::{
    chow_bit_loading, cioffi_power_loading, dmt_demodulate, dmt_modulate, estimate_snr, frame_bits, rate_to_bits,
    snr_probe_waveform, ChowSettings, DmtConfig, LoadingTable, SnrProfile,
};
use crate::error::{invalid, Result};
use crate::evaluate::{
    count_ber, latency_budget, measure_extinction_and_oma, mix_seed, run_sweep, BerReport, ChainSpec, LatencyBudget,
    SweepPoint,
};
use crate::link::{apply_channel, preset, stages_in, ChannelModel, Noise, StageGroup};
use crate::pam::{
    debruijn_payload, pam_receive, scrambled_payload, pam_transmit_detailed, Detector, LevelAdjust, PamRxConfig, PamTxConfig,
};
use crate::sigproc::{decimate, SampleBuffer};

/// Sample rate of the converters.
pub const DAC_RATE: f64 = 84e9;

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointParams {
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub rop_dbm: f64,
}

/// Measurements and trained state of one grid point.
#[derive(Debug, Clone)]
pub struct PointOutcome {
    pub report: BerReport,
    /// Named tap sets: transmit pre-emphasis and receive FFE (first block).
    pub taps: Vec<(String, FfeTaps)>,
    pub snr: Option<SnrProfile>,
    pub loading: Option<LoadingTable>,
    /// Optical extinction at the modulator output, when a modulator is modeled.
    pub extinction_db: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub points: Vec<SweepPoint<PointParams, PointOutcome>>,
    pub latency: Option<LatencyBudget>,
}

impl ExperimentResult {
    pub fn failed(&self) -> impl Iterator<Item = &SweepPoint<PointParams, PointOutcome>> {
        self.points.iter().filter(|p| p.outcome.is_err())
    }
}

/// Cartesian product x × y × ROP, ROP varying fastest.
pub fn grid(cfg: &ExperimentConfig) -> Vec<PointParams> {
    let xs: Vec<Option<f64>> = match &cfg.sweep {
        Some(s) => s.x.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let ys: Vec<Option<f64>> = match cfg.sweep.as_ref().and_then(|s| s.y.as_ref()) {
        Some(y) => y.values.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &x in &xs {
        for &y in &ys {
            for &rop_dbm in &cfg.channel.rop_dbm {
                out.push(PointParams { x, y, rop_dbm });
            }
        }
    }
    out
}

fn as_count(key: &str, v: f64) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(invalid("sweep", format!("{key} needs a non-negative integer, got {v}")));
    }
    Ok(v as usize)
}

/// Config with one swept key set to `value`.
pub fn apply_sweep_value(cfg: &ExperimentConfig, key: &str, value: f64) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    fn pam<'a>(c: &'a mut ExperimentConfig, key: &str) -> Result<&'a mut PamSection> {
        c.pam
            .as_mut()
            .ok_or_else(|| invalid("sweep", format!("{key} needs a PAM format")))
    }
    match key {
        "bit_rate" => c.bit_rate = value,
        "pam.tx_taps" => pam(&mut c, key)?.tx_taps = as_count(key, value)?,
        "pam.rx_taps" => pam(&mut c, key)?.rx_taps = as_count(key, value)?,
        "pam.mlse_memory" => {
            let memory = as_count(key, value)?;
            pam(&mut c, key)?.detector = if memory == 0 {
                Detector::Slicer
            } else {
                Detector::Mlse { memory }
            };
        }
        "pam.clipping_ratio_db" => pam(&mut c, key)?.clipping_ratio_db = Some(value),
        "dmt.clipping_ratio_db" | "dmt.fft_length" => {
            let d = c
                .dmt
                .as_mut()
                .ok_or_else(|| invalid("sweep", format!("{key} needs format dmt")))?;
            if key == "dmt.fft_length" {
                d.modem.fft_length = as_count(key, value)?;
            } else {
                d.modem.clipping_ratio_db = Some(value);
            }
        }
        "channel.overrides.fiber_km" => c.channel.overrides.fiber_km = Some(value),
        "channel.overrides.saturation_knee" => c.channel.overrides.saturation_knee = Some(value),
        "channel.overrides.noise_std" => c.channel.overrides.noise_std = Some(value),
        "channel.overrides.adc_noise_std" => c.channel.overrides.adc_noise_std = Some(value),
        "channel.overrides.eml_swing_v" => c.channel.overrides.eml_swing_v = Some(value),
        "channel.overrides.eml_bias_v" => c.channel.overrides.eml_bias_v = Some(value),
        other => return Err(invalid("sweep", format!("`{other}` cannot be swept"))),
    }
    Ok(c)
}

/// The preset with overrides applied, before the ROP is set.
pub fn resolve_channel(name: &str, o: &ChannelOverrides) -> Result<ChannelModel> {
    let mut m = preset(name).ok_or_else(|| invalid("preset", format!("unknown preset `{name}`")))?;
    if let Some(v) = o.fiber_km {
        m.budget.fiber_km = v;
    }
    if let Some(v) = o.attenuation_db_per_km {
        m.budget.attenuation_db_per_km = v;
    }
    if let Some(v) = o.launch_dbm {
        m.budget.launch_dbm = v;
    }
    if let Some(v) = o.noise_std {
        m.noise = Noise::Thermal { std: v };
    }
    if let Some(v) = o.adc_noise_std {
        m.adc_noise_std = v;
    }
    if let Some(v) = o.saturation_knee {
        m.saturation_knee = Some(v);
    }
    if o.saturation == Some(false) {
        m.saturation_knee = None;
    }
    if let Some(drive) = m.eml.as_mut() {
        if let Some(v) = o.eml_bias_v {
            drive.bias_v = v;
        }
        if let Some(v) = o.eml_swing_v {
            drive.swing_v = v;
        }
    }
    for stage in &mut m.tx {
        match stage.name.as_str() {
            "eml_dip" => stage.enabled = o.eml_dip.unwrap_or(stage.enabled),
            "clock_notch" => stage.enabled = o.clock_notch.unwrap_or(stage.enabled),
            _ => {}
        }
    }
    m.validate()?;
    Ok(m)
}

/// Config of a single grid point with its sweep values applied.
pub fn point_config(cfg: &ExperimentConfig, p: &PointParams) -> Result<ExperimentConfig> {
    let mut c = cfg.clone();
    if let Some(s) = &cfg.sweep {
        if let Some(x) = p.x {
            c = apply_sweep_value(&c, &s.x.key, x)?;
        }
        if let (Some(axis), Some(y)) = (&s.y, p.y) {
            c = apply_sweep_value(&c, &axis.key, y)?;
        }
    }
    c.validate().map_err(|e| invalid("config", e.to_string()))?;
    Ok(c)
}

fn block_seed(point_seed: u64, block: usize) -> u64 {
    mix_seed(point_seed ^ mix_seed(block as u64 + 1))
}

fn pam_configs(c: &ExperimentConfig, model: &ChannelModel) -> Result<(PamTxConfig, PamRxConfig)> {
    let p = c.pam.as_ref().ok_or_else(|| invalid("pam", "missing section"))?;
    let pr = c.format == Format::PrPam4;
    let symbol_rate = c.bit_rate / 2.0;
    let tx = PamTxConfig {
        symbol_rate,
        dac_rate: 1.5 * symbol_rate,
        beta: p.beta,
        partial_response: pr,
        level_adjust: match (&model.eml, p.level_adjust) {
            (Some(drive), true) => LevelAdjust::Modulator { drive: drive.clone() },
            _ => LevelAdjust::Identity,
        },
        pre_emphasis_taps: None,
        clipping_ratio_db: p.clipping_ratio_db,
        dac_bits: p.dac_bits,
        ..PamTxConfig::default()
    };
    let rx = PamRxConfig {
        symbol_rate,
        partial_response: pr,
        equalizer: p.schedule(),
        detector: p.detector.clone(),
        traceback: p.traceback,
        clock_recovery: p.clock_recovery,
        ..PamRxConfig::default()
    };
    Ok((tx, rx))
}

/// Predistorter trained on the transmitter's own waveform as seen through
/// the electrical stages of `model`.
pub fn pam_preemphasis(
    bits: &[u8],
    tx: &PamTxConfig,
    model: &ChannelModel,
    n_taps: usize,
    mu: f64,
    passes: usize,
) -> Result<FfeTaps> {
    let probe = pam_transmit_detailed(bits, tx)?.waveform;
    let observed = observe_through(&probe, &stages_in(&model.tx, StageGroup::Electrical))?;
    train_preemphasis(&probe, &observed, n_taps, mu, passes)
}

/// Modulator output power with the transmitter stages only.
pub fn optical_output(waveform: &SampleBuffer, model: &ChannelModel) -> Result<Option<SampleBuffer>> {
    if model.eml.is_none() {
        return Ok(None);
    }
    let tx_only = ChannelModel {
        tx: model.tx.clone(),
        eml: model.eml.clone(),
        ..ChannelModel::ideal()
    };
    apply_channel(waveform, &tx_only).map(Some)
}

/// Extinction of the symbol-spaced optical levels, at the sampling phase
/// with the widest level spread.
pub fn pam_extinction_db(optical: &SampleBuffer, sps: usize, n_levels: usize) -> Result<f64> {
    let mut best: Option<f64> = None;
    for phase in 0..sps {
        let s = decimate(optical, sps, phase)?;
        if let Ok(levels) = measure_extinction_and_oma(&s, n_levels) {
            best = Some(best.map_or(levels.extinction_db, |b: f64| b.max(levels.extinction_db)));
        }
    }
    best.ok_or(crate::Error::TooFewClusters {
        found: 1,
        expected: n_levels,
    })
}

fn run_pam_point(c: &ExperimentConfig, model: &ChannelModel, seed: u64) -> Result<PointOutcome> {
    let p = c.pam.as_ref().ok_or_else(|| invalid("pam", "missing section"))?;
    let bits = payload(c, p.payload_order)?;
    let (mut tx, rx) = pam_configs(c, model)?;
    let mut taps = Vec::new();
    if p.tx_taps > 0 {
        let pre = pam_preemphasis(&bits, &tx, model, p.tx_taps, p.preemphasis_mu, p.preemphasis_passes)?;
        tx.pre_emphasis_taps = Some(pre.coefficients().to_vec());
        taps.push(("tx_preemphasis".to_string(), pre));
    }
    let wave = pam_transmit_detailed(&bits, &tx)?;
    // the DAC runs at 3 samples per 2 symbols; every third sample sits on a symbol
    let extinction_db = match optical_output(&wave.waveform, model)? {
        Some(opt) => {
            let levels = if tx.partial_response { 7 } else { 4 };
            pam_extinction_db(&opt, tx.oversample[0], levels).ok()
        }
        None => None,
    };

    let mut report = BerReport::from_counts(0, 0);
    for b in 0..c.blocks {
        let m = model.with_seed(block_seed(seed, b));
        let received = apply_channel(&wave.waveform, &m)?;
        let rec = pam_receive(&received, &rx, &wave.symbols)?;
        report = report.merge(&count_ber(&bits, &rec.bits)?);
        if b == 0 {
            taps.push(("rx_ffe".to_string(), rec.taps));
        }
    }
    Ok(PointOutcome {
        report,
        taps,
        snr: None,
        loading: None,
        extinction_db,
    })
}

fn payload(c: &ExperimentConfig, order: usize) -> Result<Vec<u8>> {
    if c.scramble {
        scrambled_payload(order)
    } else {
        debruijn_payload(order)
    }
}

/// Payload bits cycled to `len`.
fn cycled(payload: &[u8], len: usize) -> Vec<u8> {
    payload.iter().copied().cycle().take(len).collect()
}

fn dmt_modem(c: &ExperimentConfig) -> Result<(DmtConfig, usize)> {
    let d = c.dmt.as_ref().ok_or_else(|| invalid("dmt", "missing section"))?;
    let modem = DmtConfig {
        target_bit_rate: c.bit_rate,
        ..d.modem.clone()
    };
    Ok((modem, d.frames_per_block))
}

/// SNR estimate from the probe, then Chow bits and optional Cioffi power.
pub fn dmt_loading(
    modem: &DmtConfig,
    model: &ChannelModel,
    frames: usize,
    seed: u64,
) -> Result<(SnrProfile, LoadingTable)> {
    let probe = snr_probe_waveform(modem, frames)?;
    let rx = apply_channel(&probe, &model.with_seed(seed))?;
    let snr = estimate_snr(&rx, modem)?;
    let settings = ChowSettings {
        gap_db: modem.gap_db,
        max_carriers: Some(modem.active_carriers()),
        ..ChowSettings::default()
    };
    let bits = chow_bit_loading(&snr, rate_to_bits(modem, modem.sample_rate), &settings)?;
    let loading = if modem.power_loading {
        cioffi_power_loading(&bits, &snr)?
    } else {
        bits
    };
    Ok((snr, loading))
}

fn run_dmt_point(c: &ExperimentConfig, model: &ChannelModel, seed: u64) -> Result<PointOutcome> {
    let (modem, frames) = dmt_modem(c)?;
    let (snr, loading) = dmt_loading(&modem, model, frames, mix_seed(seed))?;
    let bits = cycled(&payload(c, 8)?, frames * frame_bits(&loading, &modem));
    let tx = dmt_modulate(&bits, &loading, &modem)?;
    let extinction_db = optical_output(&tx, model)?
        .and_then(|o| measure_extinction_and_oma(&o, 2).ok())
        .map(|l| l.extinction_db);

    let mut report = BerReport::from_counts(0, 0);
    for b in 0..c.blocks {
        let received = apply_channel(&tx, &model.with_seed(block_seed(seed, b)))?;
        let rec = dmt_demodulate(&received, &loading, &modem)?;
        report = report.merge(&count_ber(&bits, &rec.bits)?);
    }
    Ok(PointOutcome {
        report,
        taps: Vec::new(),
        snr: Some(snr),
        loading: Some(loading),
        extinction_db,
    })
}

/// Full pipeline at one grid point.
pub fn run_point(cfg: &ExperimentConfig, p: &PointParams, seed: u64) -> Result<PointOutcome> {
    let c = point_config(cfg, p)?;
    let model = resolve_channel(&c.channel.preset, &c.channel.overrides)?.with_rop(p.rop_dbm)?;
    match c.format {
        Format::Dmt => run_dmt_point(&c, &model, seed),
        Format::NyquistPam4 | Format::PrPam4 => run_pam_point(&c, &model, seed),
    }
}

/// Latency of the configured single-carrier chain; `None` for DMT.
pub fn chain_latency(cfg: &ExperimentConfig) -> Result<Option<LatencyBudget>> {
    let Some(p) = &cfg.pam else { return Ok(None) };
    let model = resolve_channel(&cfg.channel.preset, &cfg.channel.overrides)?;
    let chain = ChainSpec {
        tx_taps: p.tx_taps,
        rx_taps: p.rx_taps,
        mlse_memory: match p.detector {
            Detector::Mlse { memory } => Some(memory),
            Detector::Slicer => None,
        },
    };
    latency_budget(&chain, model.budget.fiber_km, &cfg.latency).map(Some)
}

/// Runs every grid point on up to `jobs` threads. `progress` is called with
/// the number of points once, before the work starts.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize, progress: impl Fn(usize)) -> Result<ExperimentResult> {
    let params = grid(cfg);
    progress(params.len());
    let points = run_sweep(&params, cfg.seed, jobs, |p, seed| run_point(cfg, p, seed));
    Ok(ExperimentResult {
        config: cfg.clone(),
        points,
        latency: chain_latency(cfg)?,
    })
}

pub const BER_COLUMNS: &str = "rop_dbm,bits_total,bit_errors,ber,ci_low,ci_high,measured,kp4_pass,ci_bch_pass,status";

fn ber_columns(p: &SweepPoint<PointParams, PointOutcome>) -> String {
    match &p.outcome {
        Ok(o) => {
            let r = &o.report;
            format!(
                "{},{},{},{:.6e},{:.6e},{:.6e},{},{},{},ok",
                p.param.rop_dbm,
                r.bits_total,
                r.bit_errors,
                r.ber,
                r.confidence.0,
                r.confidence.1,
                r.is_measured(),
                r.passes("kp4").unwrap_or(false),
                r.passes("ci_bch").unwrap_or(false)
            )
        }
        Err(e) => format!(
            "{},0,0,nan,nan,nan,false,false,false,error: {}",
            p.param.rop_dbm,
            e.replace([',', '\n'], ";")
        ),
    }
}

fn sweep_prefix(p: &PointParams) -> String {
    let mut s = String::new();
    for v in [p.x, p.y].into_iter().flatten() {
        let _ = write!(s, "{v},");
    }
    s
}

/// `ber_vs_rop.csv`: one row per point.
pub fn ber_vs_rop_csv(r: &ExperimentResult) -> String {
    let mut s = format!("{BER_COLUMNS}\n");
    for p in &r.points {
        s.push_str(&ber_columns(p));
        s.push('\n');
    }
    s
}

/// `sweep_grid.csv`: swept values followed by the BER columns.
pub fn sweep_grid_csv(r: &ExperimentResult) -> Option<String> {
    let sweep = r.config.sweep.as_ref()?;
    let keys: Vec<&str> = sweep.axes().iter().map(|a| a.key.as_str()).collect();
    let mut s = format!("{},{BER_COLUMNS}\n", keys.join(","));
    for p in &r.points {
        s.push_str(&sweep_prefix(&p.param));
        s.push_str(&ber_columns(p));
        s.push('\n');
    }
    Some(s)
}

/// Prefixes every data row of `csv` with the point index.
fn with_point_column(out: &mut String, header_done: &mut bool, point: usize, csv: &str) {
    let mut lines = csv.lines();
    let header = lines.next().unwrap_or("");
    if !*header_done {
        let _ = writeln!(out, "point,{header}");
        *header_done = true;
    }
    for l in lines {
        let _ = writeln!(out, "{point},{l}");
    }
}

fn per_point_csv(
    r: &ExperimentResult,
    empty_header: &str,
    render: impl Fn(&PointOutcome) -> Option<String>,
) -> Option<String> {
    let mut out = String::new();
    let mut header_done = false;
    for p in &r.points {
        if let Some(csv) = p.outcome.as_ref().ok().and_then(&render) {
            with_point_column(&mut out, &mut header_done, p.index, &csv);
        }
    }
    if !header_done {
        out = format!("point,{empty_header}\n");
    }
    Some(out)
}

pub fn taps_csv(r: &ExperimentResult) -> String {
    per_point_csv(r, "stage,index,coefficient", |o| {
        let mut s = String::from("stage,index,coefficient\n");
        for (name, taps) in &o.taps {
            for line in taps.to_csv().lines().skip(1) {
                let _ = writeln!(s, "{name},{line}");
            }
        }
        Some(s)
    })
    .unwrap_or_default()
}

fn summary(r: &ExperimentResult) -> String {
    let c = &r.config;
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", c.name);
    let _ = writeln!(s, "format: {}", c.format.name());
    let _ = writeln!(s, "bit_rate: {:.3} Gb/s", c.bit_rate / 1e9);
    let _ = writeln!(s, "channel: {}", c.channel.preset);
    let (lo, hi) = c
        .channel
        .rop_dbm
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let _ = writeln!(s, "rop_range_dbm: {lo} .. {hi}");
    let _ = writeln!(s, "seed: {}", c.seed);
    let _ = writeln!(s, "blocks_per_point: {}", c.blocks);
    let _ = writeln!(s);
    for p in &r.points {
        let mut label = String::new();
        if let Some(sw) = &c.sweep {
            for (axis, v) in sw.axes().iter().zip([p.param.x, p.param.y]) {
                if let Some(v) = v {
                    let _ = write!(label, "{}={v} ", axis.key);
                }
            }
        }
        match &p.outcome {
            Ok(o) => {
                let rep = &o.report;
                let verdict = |k: &str| if rep.passes(k) == Some(true) { "pass" } else { "fail" };
                let _ = write!(
                    s,
                    "point {}: {label}rop {} dBm: ber {:.3e} ({} / {} bits{}) kp4 {} ci_bch {}",
                    p.index,
                    p.param.rop_dbm,
                    rep.ber,
                    rep.bit_errors,
                    rep.bits_total,
                    if rep.is_measured() { "" } else { ", bounded" },
                    verdict("kp4"),
                    verdict("ci_bch")
                );
                if let Some(e) = o.extinction_db {
                    let _ = write!(s, " extinction {e:.2} dB");
                }
                s.push('\n');
            }
            Err(e) => {
                let _ = writeln!(s, "point {}: {label}rop {} dBm: FAILED: {e}", p.index, p.param.rop_dbm);
            }
        }
    }
    if let Some(l) = &r.latency {
        let _ = writeln!(s);
        let _ = writeln!(s, "latency:");
        s.push_str(&l.to_string());
    }
    s
}

/// Writes every artifact into `dir` and returns the paths written.
pub fn write_artifacts(r: &ExperimentResult, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(&str, String)> = vec![("ber_vs_rop.csv", ber_vs_rop_csv(r))];
    if let Some(g) = sweep_grid_csv(r) {
        files.push(("sweep_grid.csv", g));
    }
    match r.config.format {
        Format::Dmt => {
            let spacing = r
                .config
                .dmt
                .as_ref()
                .map_or(DAC_RATE / 512.0, |d| d.modem.sample_rate / d.modem.fft_length as f64);
            // with an FFT-length sweep the spacing varies per point; frequencies follow each point's own length
            let spacing_of = |p: &PointParams| -> f64 {
                point_config(&r.config, p)
                    .ok()
                    .and_then(|c| c.dmt)
                    .map_or(spacing, |d| d.modem.sample_rate / d.modem.fft_length as f64)
            };
            let mut loading = String::new();
            let mut snr = String::new();
            let (mut lh, mut sh) = (false, false);
            for p in &r.points {
                if let Ok(o) = &p.outcome {
                    if let Some(l) = &o.loading {
                        with_point_column(&mut loading, &mut lh, p.index, &l.to_csv());
                    }
                    if let Some(v) = &o.snr {
                        with_point_column(&mut snr, &mut sh, p.index, &v.to_csv(spacing_of(&p.param)));
                    }
                }
            }
            if !lh {
                loading = "point,carrier,bits,power_db\n".into();
            }
            if !sh {
                snr = "point,carrier,frequency_hz,snr_db\n".into();
            }
            files.push(("loading_table.csv", loading));
            files.push(("snr_profile.csv", snr));
        }
        Format::NyquistPam4 | Format::PrPam4 => files.push(("taps.csv", taps_csv(r))),
    }
    if let Some(l) = &r.latency {
        files.push(("latency.txt", l.to_string()));
    }
    files.push(("summary.txt", summary(r)));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
