use serde::{Deserialize, Serialize};

use super::ffe::{FfeTaps, LmsEqualizer};
use crate::error::{invalid, Error, Result};
use crate::link::{cascade_response, FrequencyResponse};
use crate::sigproc::fft::circular_xcorr;
use crate::sigproc::{apply_frequency_response, SampleBuffer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreemphasisSettings {
    pub n_taps: usize,
    pub mu: f64,
    pub passes: usize,
}

impl Default for PreemphasisSettings {
    fn default() -> Self {
        Self {
            n_taps: 61,
            mu: 2e-3,
            passes: 12,
        }
    }
}

/// Indirect learning: adapts a post-filter `W` so that `W(observed) ≈ probe`,
/// to be installed in front of the transmitter as its predistorter.
///
/// `observed` is the probe after the transmitter components, at the same rate.
/// Both are scaled by the probe RMS; the observation is integer-aligned to the
/// probe first so the taps only absorb the fractional delay.
pub fn train_preemphasis(
    probe: &SampleBuffer,
    observed: &SampleBuffer,
    n_taps: usize,
    mu: f64,
    passes: usize,
) -> Result<FfeTaps> {
    if observed.len() != probe.len() {
        return Err(Error::LengthMismatch {
            expected: probe.len(),
            actual: observed.len(),
        });
    }
    if probe.len() < 10 * n_taps {
        return Err(invalid(
            "probe",
            format!("{} samples is shorter than 10 x {n_taps} taps", probe.len()),
        ));
    }
    let rms = probe.rms();
    if rms == 0.0 {
        return Err(Error::ZeroPower);
    }
    let target: Vec<f64> = probe.samples().iter().map(|v| v / rms).collect();
    let obs: Vec<f64> = observed.samples().iter().map(|v| v / rms).collect();
    let r = circular_xcorr(&obs, &target);
    let n = obs.len();
    let lag = (0..n).max_by(|&a, &b| r[a].total_cmp(&r[b])).unwrap_or(0);
    let aligned: Vec<f64> = (0..n).map(|k| obs[(k + lag) % n]).collect();

    let mut eq = LmsEqualizer::new(n_taps)?;
    for _ in 0..passes.max(1) {
        eq.train(&aligned, &target, n, mu)?;
    }
    eq.taps(mu)
}

/// The probe as seen at the transmitter output through `stages`.
pub fn observe_through(probe: &SampleBuffer, stages: &[FrequencyResponse]) -> Result<SampleBuffer> {
    apply_frequency_response(probe, |f| cascade_response(stages, f))
}

/// Gain of the predistorter at `f` relative to DC, in dB.
pub fn boost_db(taps: &FfeTaps, f: f64, sample_rate: f64) -> f64 {
    taps.magnitude_db(f, sample_rate) - taps.magnitude_db(0.0, sample_rate)
}
