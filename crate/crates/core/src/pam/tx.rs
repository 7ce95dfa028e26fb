use serde::{Deserialize, Serialize};

use super::mapping::{pam4_map, pr_encode, PamMapping};
use crate::error::{invalid, Result};
use crate::link::EmlDrive;
use crate::sigproc::{
    circular_fir_centered, clip, decimate, quantize, raised_cosine_shape, Quantizer, SampleBuffer,
    SymbolSequence,
};

/// Symbol-level amplitudes applied before pulse shaping, one per line level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelAdjustment {
    target_levels: Vec<f64>,
}

impl LevelAdjustment {
    pub fn new(target_levels: Vec<f64>) -> Result<Self> {
        if target_levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("level_adjust", "levels must be strictly increasing"));
        }
        Ok(Self { target_levels })
    }

    pub fn identity(alphabet: &[f64]) -> Self {
        Self {
            target_levels: alphabet.to_vec(),
        }
    }

    /// Pre-distorted levels that come out of the modulator equally spaced in power.
    ///
    /// `outer_drive` is the normalized drive (±1 = full swing) reached by the
    /// outermost nominal level; the outer levels stay in place and the inner
    /// ones move so that `drive.power_for_drive` is equidistant.
    pub fn for_modulator(drive: &EmlDrive, nominal: &[f64], outer_drive: f64) -> Result<Self> {
        let peak = nominal.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 || !(outer_drive > 0.0) {
            return Err(invalid("level_adjust", "nominal levels and drive must be non-zero"));
        }
        let lo = drive.power_for_drive(-outer_drive);
        let hi = drive.power_for_drive(outer_drive);
        let levels = nominal
            .iter()
            .map(|v| {
                let p = lo + (v / peak + 1.0) / 2.0 * (hi - lo);
                drive.drive_for_power(p) / outer_drive * peak
            })
            .collect();
        Self::new(levels)
    }

    pub fn target_levels(&self) -> &[f64] {
        &self.target_levels
    }
}

/// How the symbol levels are pre-adjusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevelAdjust {
    #[default]
    Identity,
    /// Explicit levels, one per line level (4, or 7 with partial response).
    Fixed { levels: Vec<f64> },
    /// Derived from the modulator curve at the drive the waveform actually reaches.
    Modulator { drive: EmlDrive },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PamTxConfig {
    pub symbol_rate: f64,
    pub dac_rate: f64,
    pub beta: f64,
    /// Shaping runs at `oversample[0]` samples per symbol; every
    /// `oversample[1]`-th sample is kept.
    pub oversample: [usize; 2],
    pub partial_response: bool,
    pub mapping: PamMapping,
    pub level_adjust: LevelAdjust,
    pub pre_emphasis_taps: Option<Vec<f64>>,
    pub clipping_ratio_db: Option<f64>,
    pub dac_bits: u32,
}

impl Default for PamTxConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 56e9,
            dac_rate: 84e9,
            beta: 0.1,
            oversample: [3, 2],
            partial_response: false,
            mapping: PamMapping::default(),
            level_adjust: LevelAdjust::Identity,
            pre_emphasis_taps: None,
            clipping_ratio_db: None,
            dac_bits: 8,
        }
    }
}

impl PamTxConfig {
    pub fn validate(&self) -> Result<()> {
        self.mapping.validate()?;
        let [p, q] = self.oversample;
        if p == 0 || q == 0 {
            return Err(invalid("oversample", "factors must be >= 1"));
        }
        let produced = self.symbol_rate * p as f64 / q as f64;
        if !(self.symbol_rate > 0.0) || (produced - self.dac_rate).abs() > 1e-9 * self.dac_rate {
            return Err(invalid(
                "oversample",
                format!(
                    "{} Bd x {p}/{q} = {produced} S/s does not match the DAC rate {}",
                    self.symbol_rate, self.dac_rate
                ),
            ));
        }
        if let Some(t) = &self.pre_emphasis_taps {
            if t.is_empty() || t.len() % 2 == 0 {
                return Err(invalid("pre_emphasis_taps", "tap count must be odd"));
            }
        }
        if let LevelAdjust::Fixed { levels } = &self.level_adjust {
            let want = if self.partial_response { 7 } else { 4 };
            if levels.len() != want {
                return Err(invalid(
                    "level_adjust",
                    format!("expected {want} levels, got {}", levels.len()),
                ));
            }
        }
        Ok(())
    }
}

/// The DAC waveform together with the symbol streams that produced it.
#[derive(Debug, Clone)]
pub struct PamWaveform {
    /// DAC output in full-scale units, `[-1, 1]`.
    pub waveform: SampleBuffer,
    /// Mapped PAM4 symbols.
    pub symbols: SymbolSequence,
    /// Symbols on the line: the PAM4 symbols, or the seven-level sums.
    pub line: SymbolSequence,
    /// Levels actually used for each line index after adjustment.
    pub levels: Vec<f64>,
    /// DAC full-scale units per nominal level unit.
    pub drive_per_level: f64,
}

struct Shaped {
    waveform: SampleBuffer,
    drive_per_level: f64,
}

fn shape_and_convert(line: &SymbolSequence, levels: &[f64], cfg: &PamTxConfig) -> Result<Shaped> {
    let values: Vec<f64> = line.indices().iter().map(|&i| levels[i]).collect();
    let symbols = SampleBuffer::new(values, cfg.symbol_rate)?;
    let [p, q] = cfg.oversample;
    let fine = raised_cosine_shape(&symbols, cfg.beta, p, 1)?;
    let mut x = decimate(&fine, q, 0)?;
    if let Some(taps) = &cfg.pre_emphasis_taps {
        x = x.with_samples(circular_fir_centered(x.samples(), taps))?;
    }
    if let Some(cr) = cfg.clipping_ratio_db {
        x = clip(&x, cr)?;
    }
    let peak = x.peak();
    if peak == 0.0 {
        return Err(crate::Error::ZeroPower);
    }
    let quantizer = Quantizer::symmetric(cfg.dac_bits, peak)?;
    let q = quantize(&x, &quantizer)?;
    let waveform = q.with_samples(q.samples().iter().map(|v| v / peak).collect())?;
    Ok(Shaped {
        waveform,
        drive_per_level: 1.0 / peak,
    })
}

/// Map → optional delay-and-add → level adjustment → raised-cosine shaping at
/// `oversample[0]` sps → keep every `oversample[1]`-th sample → optional
/// pre-emphasis → optional clipping → DAC quantization to full scale.
pub fn pam_transmit_detailed(bits: &[u8], cfg: &PamTxConfig) -> Result<PamWaveform> {
    cfg.validate()?;
    let symbols = pam4_map(bits, &cfg.mapping)?;
    if symbols.is_empty() {
        return Err(invalid("bits", "payload is empty"));
    }
    let line = if cfg.partial_response {
        pr_encode(&symbols)?
    } else {
        symbols.clone()
    };
    let nominal = line.alphabet().to_vec();
    let outer = nominal.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let (levels, shaped) = match &cfg.level_adjust {
        LevelAdjust::Identity => (nominal.clone(), shape_and_convert(&line, &nominal, cfg)?),
        LevelAdjust::Fixed { levels } => {
            let adj = LevelAdjustment::new(levels.clone())?;
            let s = shape_and_convert(&line, adj.target_levels(), cfg)?;
            (adj.target_levels().to_vec(), s)
        }
        LevelAdjust::Modulator { drive } => {
            // the drive reached by the outer level depends on the waveform peak,
            // which in turn depends on the adjusted levels
            let mut levels = nominal.clone();
            let mut shaped = shape_and_convert(&line, &levels, cfg)?;
            for _ in 0..3 {
                let outer_drive = (outer * shaped.drive_per_level).min(1.0);
                levels = LevelAdjustment::for_modulator(drive, &nominal, outer_drive)?
                    .target_levels()
                    .to_vec();
                shaped = shape_and_convert(&line, &levels, cfg)?;
            }
            (levels, shaped)
        }
    };
    Ok(PamWaveform {
        waveform: shaped.waveform,
        symbols,
        line,
        levels,
        drive_per_level: shaped.drive_per_level,
    })
}

/// DAC output waveform for `bits`, at `cfg.dac_rate`.
pub fn pam_transmit(bits: &[u8], cfg: &PamTxConfig) -> Result<SampleBuffer> {
    Ok(pam_transmit_detailed(bits, cfg)?.waveform)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::EmlDrive;

    #[test]
    fn rate_mismatch_rejected() {
        let cfg = PamTxConfig {
            oversample: [2, 1],
            ..PamTxConfig::default()
        };
        assert!(cfg.validate().is_err());
        PamTxConfig::default().validate().unwrap();
    }

    #[test]
    fn modulator_adjustment_is_equidistant_in_power() {
        let d = EmlDrive::default();
        for (nominal, outer_drive) in [
            (vec![-3.0, -1.0, 1.0, 3.0], 0.8),
            ((0..7).map(|k| -6.0 + 2.0 * k as f64).collect::<Vec<_>>(), 0.95),
        ] {
            let adj = LevelAdjustment::for_modulator(&d, &nominal, outer_drive).unwrap();
            let peak = nominal.last().copied().unwrap();
            let p: Vec<f64> = adj
                .target_levels()
                .iter()
                .map(|v| d.power_for_drive(v / peak * outer_drive))
                .collect();
            let step = (p[p.len() - 1] - p[0]) / (p.len() - 1) as f64;
            for w in p.windows(2) {
                assert!(((w[1] - w[0]) / step - 1.0).abs() < 0.01);
            }
            // inner levels pulled toward the steep middle of the curve
            assert!(adj.target_levels()[1].abs() < nominal[1].abs());
        }
    }

    #[test]
    fn identity_adjustment_is_nominal() {
        let a = [-3.0, -1.0, 1.0, 3.0];
        assert_eq!(LevelAdjustment::identity(&a).target_levels(), &a);
    }
}
