use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::sigproc::{fractional_delay, SampleBuffer};

/// Fractional sampling offset in unit intervals, wrapped to `[-0.5, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockPhase(f64);

impl ClockPhase {
    pub fn new(ui: f64) -> Self {
        let w = ui - ui.round();
        Self(if w >= 0.5 { w - 1.0 } else { w })
    }

    pub fn ui(self) -> f64 {
        self.0
    }

    /// Delays a 2-sample-per-symbol block by this phase.
    pub fn apply(self, signal: &SampleBuffer) -> Result<SampleBuffer> {
        fractional_delay(signal, 2.0 * self.0)
    }
}

pub const MIN_SYMBOLS: usize = 1000;

/// Grid of trial phases per unit interval.
pub const TRIAL_GRID: usize = 64;

/// Averaged Gardner output `mean_k y(k−½)·(y(k) − y(k−1))` of a 2-sps block.
fn gardner_error(x: &[f64]) -> f64 {
    let n = x.len();
    let symbols = n / 2;
    (0..symbols)
        .map(|k| x[2 * k + 1] * (x[(2 * k + 2) % n] - x[2 * k]))
        .sum::<f64>()
        / symbols as f64
}

fn symbol_energy(x: &[f64]) -> f64 {
    x.iter().step_by(2).map(|v| v * v).sum::<f64>() / (x.len() / 2) as f64
}

/// First-harmonic curve `offset + cos_part·cos(2πτ) + sin_part·sin(2πτ)` over the
/// trial delay τ in UI.
///
/// Any symbol-rate average of a product of two signals band-limited below the
/// 2-sps Nyquist frequency contains only the DC and first harmonic in τ, so
/// four trial delays determine it exactly.
#[derive(Debug, Clone, Copy)]
struct Harmonic {
    offset: f64,
    cos_part: f64,
    sin_part: f64,
}

impl Harmonic {
    fn fit<F: Fn(&[f64]) -> f64>(signal: &SampleBuffer, metric: F) -> Result<Self> {
        let mut e = [0.0; 4];
        for (i, v) in e.iter_mut().enumerate() {
            let z = fractional_delay(signal, 2.0 * i as f64 / 4.0)?;
            *v = metric(z.samples());
        }
        Ok(Self {
            offset: e.iter().sum::<f64>() / 4.0,
            cos_part: (e[0] - e[2]) / 2.0,
            sin_part: (e[1] - e[3]) / 2.0,
        })
    }

    fn at(&self, tau: f64) -> f64 {
        let w = 2.0 * PI * tau;
        self.offset + self.cos_part * w.cos() + self.sin_part * w.sin()
    }

    fn amplitude(&self) -> f64 {
        self.cos_part.hypot(self.sin_part)
    }
}

/// Averaged detector output at `points` trial delays spanning one UI.
pub fn gardner_s_curve(signal: &SampleBuffer, points: usize) -> Result<Vec<(f64, f64)>> {
    check_block(signal)?;
    (0..points)
        .map(|i| {
            let tau = i as f64 / points as f64 - 0.5;
            let z = fractional_delay(signal, 2.0 * tau)?;
            Ok((tau, gardner_error(z.samples())))
        })
        .collect()
}

fn check_block(signal: &SampleBuffer) -> Result<()> {
    if signal.len() % 2 != 0 || signal.len() / 2 < MIN_SYMBOLS {
        return Err(invalid(
            "signal",
            format!("need an even block of >= {MIN_SYMBOLS} symbols at 2 sps, got {} samples", signal.len()),
        ));
    }
    Ok(())
}

/// Phase correction from the block-averaged Gardner S-curve.
///
/// The returned phase, applied with [`ClockPhase::apply`], moves the symbol
/// instants onto the even samples: a block delayed by +0.23 UI yields −0.23 UI.
pub fn gardner_recover(signal: &SampleBuffer) -> Result<ClockPhase> {
    check_block(signal)?;
    let curve = Harmonic::fit(signal, gardner_error)?;
    let scale = signal.power().max(f64::MIN_POSITIVE);
    if curve.amplitude() < 1e-3 * scale {
        return Err(Error::NoZeroCrossing);
    }
    // the lock point is where a later trial delay turns the detector negative
    let grid: Vec<f64> = (0..=TRIAL_GRID).map(|i| i as f64 / TRIAL_GRID as f64 - 0.5).collect();
    for w in grid.windows(2) {
        let (a, b) = (curve.at(w[0]), curve.at(w[1]));
        if a >= 0.0 && b < 0.0 {
            let (mut lo, mut hi) = (w[0], w[1]);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if curve.at(mid) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(ClockPhase::new(0.5 * (lo + hi)));
        }
    }
    Err(Error::NoZeroCrossing)
}

/// Phase correction maximizing the mean symbol-instant energy (eye opening).
pub fn max_eye_phase(signal: &SampleBuffer) -> Result<ClockPhase> {
    check_block(signal)?;
    let curve = Harmonic::fit(signal, symbol_energy)?;
    Ok(ClockPhase::new(curve.sin_part.atan2(curve.cos_part) / (2.0 * PI)))
}

/// Gardner lock with the eye-opening metric as fallback when the S-curve has no lock point.
pub fn recover_clock(signal: &SampleBuffer) -> Result<ClockPhase> {
    match gardner_recover(signal) {
        Err(Error::NoZeroCrossing) => max_eye_phase(signal),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::{raised_cosine_shape, SymbolSequence};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_sps(n: usize, seed: u64) -> SampleBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = SymbolSequence::new(
            (0..n).map(|_| rng.random_range(0..4)).collect(),
            vec![-3.0, -1.0, 1.0, 3.0],
        )
        .unwrap();
        raised_cosine_shape(&s.to_buffer(56e9).unwrap(), 0.1, 2, 1).unwrap()
    }

    #[test]
    fn aligned_block_locks_at_zero() {
        let x = two_sps(4096, 1);
        assert!(gardner_recover(&x).unwrap().ui().abs() < 0.01);
    }

    #[test]
    fn injected_offset_is_undone() {
        let x = two_sps(4096, 2);
        let late = fractional_delay(&x, 2.0 * 0.23).unwrap();
        let c = gardner_recover(&late).unwrap();
        assert!((c.ui() + 0.23).abs() < 0.02, "{}", c.ui());
        let fixed = c.apply(&late).unwrap();
        assert!(gardner_recover(&fixed).unwrap().ui().abs() < 0.01);
    }

    #[test]
    fn s_curve_fit_matches_trial_grid() {
        let x = two_sps(2048, 3);
        let fit = Harmonic::fit(&x, gardner_error).unwrap();
        for (tau, e) in gardner_s_curve(&x, 16).unwrap() {
            assert!((fit.at(tau) - e).abs() < 1e-9 * fit.amplitude().max(1.0));
        }
    }

    #[test]
    fn s_curve_is_odd_about_lock() {
        let x = two_sps(4096, 4);
        let fit = Harmonic::fit(&x, gardner_error).unwrap();
        for i in 1..16 {
            let t = i as f64 / 64.0;
            let (a, b) = (fit.at(t), fit.at(-t));
            assert!((a + b).abs() < 0.05 * fit.amplitude(), "{t}: {a} {b}");
        }
    }

    #[test]
    fn max_eye_agrees() {
        let x = two_sps(4096, 5);
        let late = fractional_delay(&x, 2.0 * -0.31).unwrap();
        assert!((max_eye_phase(&late).unwrap().ui() - 0.31).abs() < 0.02);
    }

    #[test]
    fn wraps_phase() {
        assert!((ClockPhase::new(0.75).ui() + 0.25).abs() < 1e-12);
        assert!((ClockPhase::new(0.5).ui() + 0.5).abs() < 1e-12);
        assert!(gardner_recover(&two_sps(100, 6)).is_err());
    }
}
