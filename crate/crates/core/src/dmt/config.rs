use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Carriers used at the reference FFT length of 512 (out of 255 usable).
pub const REFERENCE_USED_CARRIERS: usize = 242;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DmtConfig {
    pub fft_length: usize,
    /// Cyclic prefix as `[numerator, denominator]` of the FFT length.
    pub cp_fraction: [usize; 2],
    pub data_symbols: usize,
    pub training_symbols: usize,
    /// Active carriers starting at carrier 1; `None` scales 242 of 255 to the FFT length.
    pub used_carriers: Option<usize>,
    pub clipping_ratio_db: Option<f64>,
    pub target_bit_rate: f64,
    pub sample_rate: f64,
    /// DAC resolution; `None` skips quantization.
    pub dac_bits: Option<u32>,
    pub gap_db: f64,
    pub snr_ceiling_db: f64,
    pub equalizer_mu: f64,
    /// Fraction of the ideal training autocorrelation the sync peak must reach.
    pub sync_threshold: f64,
    pub power_loading: bool,
}

impl Default for DmtConfig {
    fn default() -> Self {
        Self {
            fft_length: 512,
            cp_fraction: [1, 64],
            data_symbols: 124,
            training_symbols: 4,
            used_carriers: None,
            clipping_ratio_db: Some(15.0),
            target_bit_rate: 112e9,
            sample_rate: 84e9,
            dac_bits: Some(8),
            gap_db: 9.8,
            snr_ceiling_db: 60.0,
            equalizer_mu: 1e-3,
            sync_threshold: 0.5,
            power_loading: true,
        }
    }
}

impl DmtConfig {
    pub fn cp_length(&self) -> usize {
        self.fft_length * self.cp_fraction[0] / self.cp_fraction[1].max(1)
    }

    pub fn symbol_length(&self) -> usize {
        self.fft_length + self.cp_length()
    }

    pub fn frame_symbols(&self) -> usize {
        self.training_symbols + self.data_symbols
    }

    pub fn frame_length(&self) -> usize {
        self.frame_symbols() * self.symbol_length()
    }

    pub fn usable_carriers(&self) -> usize {
        (self.fft_length / 2).saturating_sub(1)
    }

    pub fn active_carriers(&self) -> usize {
        self.used_carriers
            .unwrap_or(self.usable_carriers() * REFERENCE_USED_CARRIERS / 255)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !self.fft_length.is_power_of_two() || self.fft_length < 8 {
            errs.push(format!("fft_length {} must be a power of two >= 8", self.fft_length));
        }
        let [num, den] = self.cp_fraction;
        if den == 0 || (self.fft_length * num) % den != 0 {
            errs.push(format!(
                "cp_fraction {num}/{den} of {} samples is not an integer",
                self.fft_length
            ));
        }
        if self.active_carriers() == 0 || self.active_carriers() > self.usable_carriers() {
            errs.push(format!(
                "used_carriers {} outside 1..={}",
                self.active_carriers(),
                self.usable_carriers()
            ));
        }
        if self.data_symbols == 0 || self.training_symbols == 0 {
            errs.push("frame needs at least one training and one data symbol".into());
        }
        if !(self.sample_rate > 0.0) || !(self.target_bit_rate >= 0.0) {
            errs.push("sample_rate must be > 0 and target_bit_rate >= 0".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(invalid("dmt", errs.join("; ")))
        }
    }
}

/// Bits each data symbol must carry so the frame delivers `cfg.target_bit_rate`:
/// `rate · N · (1 + cp) · (frame / data) / fs`, rounded up.
pub fn rate_to_bits(cfg: &DmtConfig, sample_rate: f64) -> usize {
    let per_symbol = cfg.target_bit_rate
        * cfg.symbol_length() as f64
        * cfg.frame_symbols() as f64
        / cfg.data_symbols as f64
        / sample_rate;
    // integer inputs make the exact product rational; guard the ceiling against
    // floating error at exact integers
    let exact = Ratio::new(
        (cfg.target_bit_rate.round() as u128) * cfg.symbol_length() as u128 * cfg.frame_symbols() as u128,
        (sample_rate.round() as u128).max(1) * cfg.data_symbols as u128,
    );
    if cfg.target_bit_rate.fract() == 0.0 && sample_rate.fract() == 0.0 {
        exact.ceil().to_integer() as usize
    } else {
        per_symbol.ceil() as usize
    }
}

/// Radix-2 butterflies of one N-point FFT: `N/2 · log2 N`.
pub fn fft_butterflies(fft_length: usize) -> u64 {
    (fft_length as u64 / 2) * fft_length.trailing_zeros() as u64
}
