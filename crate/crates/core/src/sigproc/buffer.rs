use num_complex::Complex64;

use crate::error::{invalid, Result};

/// A uniformly sampled real waveform together with its sample rate.
///
/// Amplitudes are dimensionless; absolute electrical or optical scaling is
/// owned by the link model.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBuffer {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SampleBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(invalid("sample_rate", format!("{sample_rate} is not > 0")));
        }
        if samples.is_empty() {
            return Err(invalid("samples", "buffer must hold at least one sample"));
        }
        if let Some(i) = samples.iter().position(|x| !x.is_finite()) {
            return Err(invalid("samples", format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.len() as f64
    }

    pub fn power(&self) -> f64 {
        self.samples.iter().map(|x| x * x).sum::<f64>() / self.len() as f64
    }

    pub fn rms(&self) -> f64 {
        self.power().sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    /// Peak-to-average power ratio in dB.
    pub fn papr_db(&self) -> f64 {
        let peak = self.peak();
        10.0 * (peak * peak / self.power()).log10()
    }

    /// Same rate, new samples. Used by the stages that transform amplitudes in place.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate)
    }
}

/// Frequency-domain view of a block: `bins[k]` sits at `k * bin_spacing` Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub bins: Vec<Complex64>,
    pub bin_spacing: f64,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Frequency of bin `k`, folded into `[-fs/2, fs/2)`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.bins.len() as i64;
        let signed = if (k as i64) < (n + 1) / 2 {
            k as i64
        } else {
            k as i64 - n
        };
        signed as f64 * self.bin_spacing
    }
}

/// Modulation symbols stored as indices into an explicit, strictly increasing
/// level alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSequence {
    indices: Vec<usize>,
    alphabet: Vec<f64>,
}

impl SymbolSequence {
    pub fn new(indices: Vec<usize>, alphabet: Vec<f64>) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(invalid("alphabet", "alphabet must not be empty"));
        }
        if alphabet.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("alphabet", "levels must be strictly increasing"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= alphabet.len()) {
            return Err(invalid(
                "indices",
                format!("index {bad} outside alphabet of {}", alphabet.len()),
            ));
        }
        Ok(Self { indices, alphabet })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn levels(&self) -> Vec<f64> {
        self.indices.iter().map(|&i| self.alphabet[i]).collect()
    }

    /// The level sequence as a waveform at one sample per symbol.
    pub fn to_buffer(&self, symbol_rate: f64) -> Result<SampleBuffer> {
        SampleBuffer::new(self.levels(), symbol_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_buffers() {
        assert!(SampleBuffer::new(vec![], 1.0).is_err());
        assert!(SampleBuffer::new(vec![1.0], 0.0).is_err());
        assert!(SampleBuffer::new(vec![f64::NAN], 1.0).is_err());
        assert!(SampleBuffer::new(vec![1.0, -1.0], 2.0).is_ok());
    }

    #[test]
    fn rejects_bad_alphabets() {
        assert!(SymbolSequence::new(vec![0], vec![1.0, 1.0]).is_err());
        assert!(SymbolSequence::new(vec![2], vec![0.0, 1.0]).is_err());
        let s = SymbolSequence::new(vec![1, 0], vec![-1.0, 1.0]).unwrap();
        assert_eq!(s.levels(), vec![1.0, -1.0]);
    }

    #[test]
    fn spectrum_frequencies_fold() {
        let s = ComplexSpectrum {
            bins: vec![Complex64::default(); 4],
            bin_spacing: 10.0,
        };
        assert_eq!(s.frequency(1), 10.0);
        assert_eq!(s.frequency(2), -20.0);
        assert_eq!(s.frequency(3), -10.0);
    }
}
