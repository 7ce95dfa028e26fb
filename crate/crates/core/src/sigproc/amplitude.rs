use super::SampleBuffer;
use crate::error::{invalid, Error, Result};

/// Clip level `rms · 10^(CR/20)` for the signal as presented.
pub fn clip_level(signal: &SampleBuffer, clipping_ratio_db: f64) -> Result<f64> {
    if !clipping_ratio_db.is_finite() {
        return Err(invalid("clipping_ratio_db", "must be finite"));
    }
    let rms = signal.rms();
    if rms == 0.0 {
        return Err(Error::ZeroPower);
    }
    Ok(rms * 10f64.powf(clipping_ratio_db / 20.0))
}

/// Hard-limits the signal to `±rms · 10^(CR/20)`.
///
/// The level is derived once from the input RMS and then frozen for the call;
/// re-clipping with [`clip_to`] at that level is a no-op.
pub fn clip(signal: &SampleBuffer, clipping_ratio_db: f64) -> Result<SampleBuffer> {
    let level = clip_level(signal, clipping_ratio_db)?;
    clip_to(signal, level)
}

pub fn clip_to(signal: &SampleBuffer, level: f64) -> Result<SampleBuffer> {
    signal.with_samples(
        signal
            .samples()
            .iter()
            .map(|x| x.clamp(-level, level))
            .collect(),
    )
}

/// Uniform quantizer over `[low, high]` with `2^bits` codes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantizer {
    pub bits: u32,
    pub low: f64,
    pub high: f64,
}

impl Quantizer {
    pub fn new(bits: u32, low: f64, high: f64) -> Result<Self> {
        if !(1..=24).contains(&bits) {
            return Err(invalid("bits", format!("{bits} outside 1..=24")));
        }
        if !(high > low) {
            return Err(invalid("full_scale", format!("[{low}, {high}] is empty")));
        }
        Ok(Self { bits, low, high })
    }

    /// Symmetric full scale `[-peak, peak]`.
    pub fn symmetric(bits: u32, peak: f64) -> Result<Self> {
        Self::new(bits, -peak, peak)
    }

    pub fn levels(&self) -> u32 {
        1 << self.bits
    }

    /// Code spacing; the extreme codes sit exactly on the range edges.
    pub fn step(&self) -> f64 {
        (self.high - self.low) / (self.levels() - 1) as f64
    }

    pub fn code(&self, x: f64) -> u32 {
        let c = ((x - self.low) / self.step()).round();
        c.clamp(0.0, (self.levels() - 1) as f64) as u32
    }

    pub fn value(&self, code: u32) -> f64 {
        self.low + code as f64 * self.step()
    }
}

pub fn quantize_codes(signal: &SampleBuffer, q: &Quantizer) -> Vec<u32> {
    signal.samples().iter().map(|&x| q.code(x)).collect()
}

/// Quantizes and returns the reconstruction levels (saturating at the range edges).
pub fn quantize(signal: &SampleBuffer, q: &Quantizer) -> Result<SampleBuffer> {
    signal.with_samples(
        signal
            .samples()
            .iter()
            .map(|&x| q.value(q.code(x)))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use statrs::function::erf::erfc;
    use std::collections::BTreeSet;

    fn gaussian(n: usize, seed: u64) -> SampleBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        SampleBuffer::new(x, 1.0).unwrap()
    }

    #[test]
    fn huge_ratio_is_identity() {
        let x = gaussian(1000, 1);
        assert_eq!(clip(&x, 1000.0).unwrap(), x);
    }

    #[test]
    fn fifteen_db_level() {
        let x = SampleBuffer::new(vec![1.0, -1.0, 1.0, -1.0], 1.0).unwrap();
        let level = clip_level(&x, 15.0).unwrap();
        assert!((level - 5.623).abs() < 1e-3);
    }

    #[test]
    fn zero_power_rejected() {
        let x = SampleBuffer::new(vec![0.0; 4], 1.0).unwrap();
        assert_eq!(clip(&x, 10.0), Err(Error::ZeroPower));
    }

    #[test]
    fn clipped_fraction_matches_gaussian_tail() {
        let n = 400_000;
        let x = gaussian(n, 2);
        let level = clip_level(&x, 10.0).unwrap();
        let clipped = x.samples().iter().filter(|v| v.abs() > level).count() as f64 / n as f64;
        // level ≈ 10^(0.5) σ; the sample RMS is within a fraction of a percent of σ
        let p = erfc(level / x.rms() / 2f64.sqrt());
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((clipped - p).abs() < 3.0 * sigma, "{clipped} vs {p}");
    }

    #[test]
    fn clip_is_idempotent_at_frozen_level() {
        let x = gaussian(10_000, 3);
        let level = clip_level(&x, 6.0).unwrap();
        let once = clip_to(&x, level).unwrap();
        assert_eq!(clip_to(&once, level).unwrap(), once);
    }

    #[test]
    fn eight_bit_ramp_hits_every_code() {
        let ramp: Vec<f64> = (0..10_000).map(|i| -1.0 + 2.0 * i as f64 / 9_999.0).collect();
        let x = SampleBuffer::new(ramp, 1.0).unwrap();
        let q = Quantizer::symmetric(8, 1.0).unwrap();
        let codes: BTreeSet<u32> = quantize_codes(&x, &q).into_iter().collect();
        assert_eq!(codes.len(), 256);
        assert_eq!(*codes.first().unwrap(), 0);
        assert_eq!(*codes.last().unwrap(), 255);
    }

    #[test]
    fn one_bit_is_two_level() {
        let x = gaussian(1000, 4);
        let q = Quantizer::symmetric(1, 2.0).unwrap();
        let y = quantize(&x, &q).unwrap();
        let distinct: BTreeSet<u64> = y.samples().iter().map(|v| v.to_bits()).collect();
        assert_eq!(distinct.len(), 2);
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert_eq!(a.signum(), b.signum());
        }
    }

    #[test]
    fn quantization_noise_is_step_squared_over_twelve() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..200_000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xb = SampleBuffer::new(x.clone(), 1.0).unwrap();
        let q = Quantizer::symmetric(8, 1.0).unwrap();
        let y = quantize(&xb, &q).unwrap();
        let noise = x
            .iter()
            .zip(y.samples())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / x.len() as f64;
        let expect = q.step().powi(2) / 12.0;
        assert!((noise / expect - 1.0).abs() < 0.05);
    }
}
