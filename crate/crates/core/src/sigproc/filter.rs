use num_complex::Complex64;

use super::fft::{dft_real, idft_real};
use super::SampleBuffer;
use crate::error::{invalid, Result};

/// Causal FIR filtering; tap 0 multiplies the current sample and the output
/// keeps the input length (the convolution tail is dropped).
pub fn fir_filter(signal: &SampleBuffer, taps: &[f64]) -> Result<SampleBuffer> {
    if taps.is_empty() {
        return Err(invalid("taps", "FIR filter needs at least one tap"));
    }
    let x = signal.samples();
    let out = (0..x.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, h)| h * x[n - k])
                .sum()
        })
        .collect();
    signal.with_samples(out)
}

/// Circular FIR with a center-referenced tap vector: the middle tap of an
/// odd-length filter multiplies the current sample.
pub fn circular_fir_centered(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let n = x.len();
    let center = taps.len() / 2;
    (0..n)
        .map(|k| {
            taps.iter()
                .enumerate()
                .map(|(j, h)| h * x[(k + n * (1 + taps.len() / n) + center - j) % n])
                .sum()
        })
        .collect()
}

/// Multiplies the periodic block by `response(f)` in the frequency domain.
///
/// `f` is the signed bin frequency in Hz. For a real output the response must
/// satisfy `H(-f) = conj(H(f))`; the Nyquist bin of even-length blocks takes
/// the real part.
pub fn apply_frequency_response<F>(signal: &SampleBuffer, response: F) -> Result<SampleBuffer>
where
    F: Fn(f64) -> Complex64,
{
    let n = signal.len();
    let spacing = signal.sample_rate() / n as f64;
    let mut spec = dft_real(signal.samples());
    for (k, bin) in spec.iter_mut().enumerate() {
        let signed = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let mut h = response(signed * spacing);
        if n % 2 == 0 && k == n / 2 {
            h = Complex64::new(h.re, 0.0);
        }
        *bin *= h;
    }
    signal.with_samples(idft_real(&spec))
}

/// Circularly delays a block by `delay` samples (fractional allowed).
pub fn fractional_delay(signal: &SampleBuffer, delay: f64) -> Result<SampleBuffer> {
    let fs = signal.sample_rate();
    apply_frequency_response(signal, |f| {
        Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f / fs * delay)
    })
}
