use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use super::mapping::{pam4_demap, pr_decode_indices, pr_encode, PamMapping};
use crate::adaptive::{lms_train, nearest_level, recover_clock, ClockPhase, FfeTaps, LmsSchedule, MlseConfig};
use crate::error::{invalid, Error, Result};
use crate::sigproc::fft::circular_xcorr;
use crate::sigproc::{decimate, resample, SampleBuffer, SymbolSequence};

/// Symbol detector after the equalizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Detector {
    /// Four-level decision; with partial response, a seven-level decision
    /// followed by symbol-wise inversion of the delay-and-add.
    Slicer,
    /// Viterbi over `4^memory` states.
    Mlse { memory: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PamRxConfig {
    pub symbol_rate: f64,
    pub partial_response: bool,
    pub mapping: PamMapping,
    pub equalizer: LmsSchedule,
    pub detector: Detector,
    pub traceback: usize,
    pub clock_recovery: bool,
    /// Normalized correlation peak below which payload alignment fails.
    pub alignment_threshold: f64,
}

impl Default for PamRxConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 56e9,
            partial_response: false,
            mapping: PamMapping::default(),
            equalizer: LmsSchedule::default(),
            detector: Detector::Slicer,
            traceback: 32,
            clock_recovery: true,
            alignment_threshold: 0.3,
        }
    }
}

impl PamRxConfig {
    /// Settings for the delay-and-add format: 21 taps and a 4-state Viterbi.
    pub fn partial_response() -> Self {
        Self {
            partial_response: true,
            equalizer: LmsSchedule {
                n_taps: 21,
                ..LmsSchedule::default()
            },
            detector: Detector::Mlse { memory: 1 },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mapping.validate()?;
        self.equalizer.validate()?;
        if !(self.symbol_rate > 0.0) {
            return Err(invalid("symbol_rate", "must be > 0"));
        }
        if let Detector::Mlse { memory } = self.detector {
            if memory == 0 || memory > crate::adaptive::MAX_MEMORY {
                return Err(invalid("memory", format!("{memory} outside 1..={}", crate::adaptive::MAX_MEMORY)));
            }
            if self.traceback < 5 * memory {
                return Err(invalid("traceback", "must be >= 5 x memory"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PamReception {
    pub bits: Vec<u8>,
    /// Detected PAM4 level indices.
    pub symbols: Vec<usize>,
    pub taps: FfeTaps,
    pub clock: Option<ClockPhase>,
    /// Equalizer output at one sample per symbol, aligned with the payload.
    pub equalized: Vec<f64>,
    /// Circular shift applied to align the block with the payload.
    pub lag: usize,
    pub tracking_mse: f64,
}

fn rate_ratio(to: f64, from: f64) -> Result<(usize, usize)> {
    let (a, b) = (to.round() as u64, from.round() as u64);
    if a == 0 || b == 0 {
        return Err(invalid("sample_rate", "rates must be >= 1 Hz"));
    }
    let r = Ratio::new(a, b);
    Ok((*r.numer() as usize, *r.denom() as usize))
}

/// Least-squares estimate of `y_k ≈ Σ_j h_j · level(x_{k−j})` over the first
/// `len` symbols, with cyclic history.
fn estimate_response(y: &[f64], x: &[usize], levels: &[f64; 4], taps: usize, len: usize) -> Vec<f64> {
    let n = x.len();
    let rows = len.max(taps);
    let a = DMatrix::from_fn(rows, taps, |k, j| levels[x[(k + n - j) % n]]);
    let b = DVector::from_fn(rows, |k, _| y[k]);
    let normal = a.transpose() * &a;
    let rhs = a.transpose() * b;
    match normal.cholesky() {
        Some(c) => c.solve(&rhs).iter().copied().collect(),
        None => {
            let mut h = vec![0.0; taps];
            h[0] = 1.0;
            h
        }
    }
}

/// Resample to 2 sps → clock recovery → 1 sps → AGC → payload alignment →
/// LMS FFE → slicer or MLSE → demapping.
///
/// `reference` holds the transmitted PAM4 symbols, used to align the block and
/// for the data-aided part of the equalizer training.
pub fn pam_receive(signal: &SampleBuffer, cfg: &PamRxConfig, reference: &SymbolSequence) -> Result<PamReception> {
    cfg.validate()?;
    let n = reference.len();
    let (p, q) = rate_ratio(2.0 * cfg.symbol_rate, signal.sample_rate())?;
    let two = resample(signal, p, q)?;
    if two.len() != 2 * n {
        return Err(Error::LengthMismatch {
            expected: 2 * n,
            actual: two.len(),
        });
    }
    let (two, clock) = if cfg.clock_recovery {
        let phase = recover_clock(&two)?;
        (phase.apply(&two)?, Some(phase))
    } else {
        (two, None)
    };
    let one = decimate(&two, 2, 0)?;

    let target = if cfg.partial_response {
        pr_encode(reference)?
    } else {
        reference.clone()
    };
    let t = target.levels();
    let t_rms = (t.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let mean = one.mean();
    let centered: Vec<f64> = one.samples().iter().map(|v| v - mean).collect();
    let rms = (centered.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms == 0.0 {
        return Err(Error::ZeroPower);
    }
    let y: Vec<f64> = centered.iter().map(|v| v * t_rms / rms).collect();

    let r = circular_xcorr(&y, &t);
    let lag = (0..n).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(0);
    let peak = r[lag] / (n as f64 * t_rms * t_rms);
    if peak < cfg.alignment_threshold {
        return Err(Error::AlignmentFailed {
            peak,
            threshold: cfg.alignment_threshold,
        });
    }
    let aligned: Vec<f64> = (0..n).map(|k| y[(k + lag) % n]).collect();

    let lms = lms_train(&SampleBuffer::new(aligned, cfg.symbol_rate)?, &target, &cfg.equalizer)?;
    let eq = &lms.output;
    let levels = cfg.mapping.levels;
    let training_len = ((n as f64 * cfg.equalizer.training_fraction).round() as usize).clamp(1, n);

    let symbols = match (&cfg.detector, cfg.partial_response) {
        (Detector::Slicer, false) => eq.iter().map(|&v| nearest_level(v, &levels)).collect(),
        (Detector::Slicer, true) => {
            let seven: Vec<usize> = eq.iter().map(|&v| nearest_level(v, target.alphabet())).collect();
            pr_decode_indices(&seven)
        }
        (Detector::Mlse { memory }, pr) => {
            let h = estimate_response(eq, reference.indices(), &levels, memory + 1, training_len);
            let mlse = MlseConfig::linear(levels, h, cfg.traceback)?;
            let mlse = if pr { mlse.with_initial_state(Some(0)) } else { mlse };
            crate::adaptive::mlse_detect(&SampleBuffer::new(eq.clone(), cfg.symbol_rate)?, &mlse)?
                .indices()
                .to_vec()
        }
    };
    Ok(PamReception {
        bits: pam4_demap(&symbols, &cfg.mapping),
        symbols,
        taps: lms.taps,
        clock,
        equalized: lms.output,
        lag,
        tracking_mse: lms.tracking_mse,
    })
}
