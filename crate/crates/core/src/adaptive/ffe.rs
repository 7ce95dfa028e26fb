use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sigproc::{circular_fir_centered, SampleBuffer, SymbolSequence};

/// Odd-length, center-referenced FIR coefficients and the LMS step that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfeTaps {
    coefficients: Vec<f64>,
    step_size: f64,
}

impl FfeTaps {
    pub fn new(coefficients: Vec<f64>, step_size: f64) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() % 2 == 0 {
            return Err(invalid(
                "n_taps",
                format!("tap count {} must be odd and >= 1", coefficients.len()),
            ));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coefficients", "must be finite"));
        }
        Ok(Self {
            coefficients,
            step_size,
        })
    }

    /// Unit center tap.
    pub fn identity(n_taps: usize) -> Result<Self> {
        let mut c = vec![0.0; n_taps];
        if n_taps > 0 {
            c[n_taps / 2] = 1.0;
        }
        Self::new(c, 0.0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn center(&self) -> usize {
        self.coefficients.len() / 2
    }

    /// Circular filtering of a periodic block.
    pub fn apply(&self, signal: &SampleBuffer) -> Result<SampleBuffer> {
        signal.with_samples(circular_fir_centered(signal.samples(), &self.coefficients))
    }

    /// Frequency response at `f` Hz for taps spaced `1 / sample_rate`, with the
    /// center tap as time zero.
    pub fn response(&self, f: f64, sample_rate: f64) -> Complex64 {
        let c = self.center() as f64;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, &h)| Complex64::from_polar(h, -2.0 * PI * f / sample_rate * (j as f64 - c)))
            .sum()
    }

    pub fn magnitude_db(&self, f: f64, sample_rate: f64) -> f64 {
        20.0 * self.response(f, sample_rate).norm().log10()
    }

    /// `index,coefficient` rows; index is relative to the center tap.
    pub fn to_csv(&self) -> String {
        let c = self.center() as i64;
        let mut out = String::from("index,coefficient\n");
        for (j, v) in self.coefficients.iter().enumerate() {
            out.push_str(&format!("{},{:.12e}\n", j as i64 - c, v));
        }
        out
    }
}

/// Index of the nearest level; ties go to the lower index. `alphabet` must be sorted.
pub fn nearest_level(sample: f64, alphabet: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &a) in alphabet.iter().enumerate() {
        let d = (sample - a).abs();
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

/// LMS adaptation schedule: data-aided passes over the leading part of the
/// block, then one decision-directed pass over all of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmsSchedule {
    pub n_taps: usize,
    pub mu_training: f64,
    pub mu_tracking: f64,
    pub training_fraction: f64,
    pub training_passes: usize,
    /// Training MSE, relative to the target power, above which the result is rejected.
    pub mse_limit: f64,
}

impl Default for LmsSchedule {
    fn default() -> Self {
        Self {
            n_taps: 41,
            mu_training: 1e-3,
            mu_tracking: 1e-4,
            training_fraction: 0.25,
            training_passes: 32,
            mse_limit: 0.5,
        }
    }
}

impl LmsSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.n_taps == 0 || self.n_taps % 2 == 0 {
            return Err(invalid("n_taps", format!("{} must be odd and >= 1", self.n_taps)));
        }
        if !(self.mu_training >= 0.0 && self.mu_tracking >= 0.0) {
            return Err(invalid("mu", "step sizes must be >= 0"));
        }
        if !(self.training_fraction > 0.0 && self.training_fraction <= 1.0) {
            return Err(invalid("training_fraction", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LmsOutcome {
    pub taps: FfeTaps,
    /// Equalizer output for the whole block from the decision-directed pass.
    pub output: Vec<f64>,
    /// Mean-square error per window of the final data-aided pass.
    pub training_mse: Vec<f64>,
    /// Mean-square error of the decision-directed pass against the decisions.
    pub tracking_mse: f64,
}

/// Symbol-spaced adaptive equalizer on a periodic block.
#[derive(Debug, Clone)]
pub struct LmsEqualizer {
    taps: Vec<f64>,
}

impl LmsEqualizer {
    pub fn new(n_taps: usize) -> Result<Self> {
        Ok(Self {
            taps: FfeTaps::identity(n_taps)?.coefficients,
        })
    }

    fn filter_at(&self, x: &[f64], k: usize) -> f64 {
        let n = x.len();
        let c = self.taps.len() / 2;
        let base = k + c + n * (1 + self.taps.len() / n);
        self.taps
            .iter()
            .enumerate()
            .map(|(j, w)| w * x[(base - j) % n])
            .sum()
    }

    fn update(&mut self, x: &[f64], k: usize, step: f64) {
        let n = x.len();
        let c = self.taps.len() / 2;
        let base = k + c + n * (1 + self.taps.len() / n);
        for (j, w) in self.taps.iter_mut().enumerate() {
            *w += step * x[(base - j) % n];
        }
    }

    fn check(&self, mu: f64) -> Result<()> {
        if self.taps.iter().any(|w| !w.is_finite() || w.abs() > 1e6) {
            return Err(Error::Diverged { mu });
        }
        Ok(())
    }

    /// One data-aided pass over `x[0..len]` against `target`; returns the MSE per window.
    pub fn train(&mut self, x: &[f64], target: &[f64], len: usize, mu: f64) -> Result<Vec<f64>> {
        let window = (len / 10).max(1);
        let mut mse = Vec::new();
        let mut acc = 0.0;
        for k in 0..len {
            let e = target[k] - self.filter_at(x, k);
            acc += e * e;
            self.update(x, k, mu * e);
            if (k + 1) % window == 0 {
                mse.push(acc / window as f64);
                acc = 0.0;
                self.check(mu)?;
            }
        }
        self.check(mu)?;
        Ok(mse)
    }

    /// Decision-directed pass over the whole block; returns outputs and MSE.
    pub fn track(&mut self, x: &[f64], alphabet: &[f64], mu: f64) -> Result<(Vec<f64>, f64)> {
        let mut out = Vec::with_capacity(x.len());
        let mut acc = 0.0;
        for k in 0..x.len() {
            let y = self.filter_at(x, k);
            let e = alphabet[nearest_level(y, alphabet)] - y;
            acc += e * e;
            self.update(x, k, mu * e);
            out.push(y);
        }
        self.check(mu)?;
        Ok((out, acc / x.len() as f64))
    }

    pub fn taps(&self, step_size: f64) -> Result<FfeTaps> {
        FfeTaps::new(self.taps.clone(), step_size)
    }
}

/// Trains a symbol-spaced FFE on a block aligned with `reference`.
///
/// The leading `training_fraction` of the block is used data-aided for
/// `training_passes` passes, after which a decision-directed pass over the full
/// block refines the taps against the reference alphabet.
pub fn lms_train(rx: &SampleBuffer, reference: &SymbolSequence, schedule: &LmsSchedule) -> Result<LmsOutcome> {
    schedule.validate()?;
    if rx.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: rx.len(),
        });
    }
    let x = rx.samples();
    let target = reference.levels();
    let target_power = target.iter().map(|t| t * t).sum::<f64>() / target.len() as f64;
    let len = ((x.len() as f64 * schedule.training_fraction).round() as usize).clamp(1, x.len());
    let mut eq = LmsEqualizer::new(schedule.n_taps)?;
    let mut training_mse = Vec::new();
    for _ in 0..schedule.training_passes.max(1) {
        training_mse = eq.train(x, &target, len, schedule.mu_training)?;
    }
    let (output, tracking_mse) = eq.track(x, reference.alphabet(), schedule.mu_tracking)?;
    let final_mse = training_mse.last().copied().unwrap_or(0.0) / target_power;
    if !(final_mse <= schedule.mse_limit) {
        return Err(Error::NotConverged {
            mse: final_mse,
            limit: schedule.mse_limit,
        });
    }
    Ok(LmsOutcome {
        taps: eq.taps(schedule.mu_training)?,
        output,
        training_mse,
        tracking_mse,
    })
}

/// Convenience form returning only the taps: `iterations` data-aided passes over
/// the whole block at step `mu`, no decision-directed refinement.
pub fn lms_train_ffe(
    rx: &SampleBuffer,
    reference: &SymbolSequence,
    n_taps: usize,
    mu: f64,
    iterations: usize,
) -> Result<FfeTaps> {
    if rx.len() != reference.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: rx.len(),
        });
    }
    let mut eq = LmsEqualizer::new(n_taps)?;
    let target = reference.levels();
    for _ in 0..iterations.max(1) {
        eq.train(rx.samples(), &target, rx.len(), mu)?;
    }
    eq.taps(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PAM4: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];

    fn random_symbols(n: usize, seed: u64) -> SymbolSequence {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymbolSequence::new((0..n).map(|_| rng.random_range(0..4)).collect(), PAM4.to_vec()).unwrap()
    }

    #[test]
    fn identity_channel_keeps_unit_center() {
        let s = random_symbols(20_000, 1);
        let rx = s.to_buffer(1.0).unwrap();
        let taps = lms_train_ffe(&rx, &s, 11, 1e-3, 2).unwrap();
        for (j, c) in taps.coefficients().iter().enumerate() {
            let expect = if j == 5 { 1.0 } else { 0.0 };
            assert!((c - expect).abs() < 1e-3, "tap {j} = {c}");
        }
    }

    #[test]
    fn nearest_level_ties_go_low() {
        let seven: Vec<f64> = (0..7).map(|i| -6.0 + 2.0 * i as f64).collect();
        assert_eq!(nearest_level(0.1, &seven), 3);
        assert_eq!(nearest_level(1.0, &seven), 3);
        assert_eq!(nearest_level(-100.0, &seven), 0);
        assert_eq!(nearest_level(100.0, &seven), 6);
    }

    #[test]
    fn rejects_even_taps_and_reports_divergence() {
        assert!(FfeTaps::identity(4).is_err());
        let s = random_symbols(2000, 2);
        let rx = SampleBuffer::new(s.levels().iter().map(|v| 0.5 * v).collect(), 1.0).unwrap();
        match lms_train_ffe(&rx, &s, 21, 5.0, 1) {
            Err(Error::Diverged { mu }) => assert_eq!(mu, 5.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn csv_is_center_referenced() {
        let t = FfeTaps::identity(3).unwrap();
        let csv = t.to_csv();
        assert!(csv.starts_with("index,coefficient\n-1,"));
        assert!(csv.lines().nth(2).unwrap().starts_with("0,1.0"));
    }

    #[test]
    fn response_of_identity_is_flat() {
        let t = FfeTaps::identity(61).unwrap();
        for f in [0.0, 1e9, 20e9, 41e9] {
            assert!(t.magnitude_db(f, 84e9).abs() < 1e-12);
        }
    }
}
