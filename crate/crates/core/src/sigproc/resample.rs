use num_complex::Complex64;

use super::fft::{dft_real, idft_real};
use super::SampleBuffer;
use crate::error::{invalid, Result};

/// Moves a block spectrum onto a DFT grid of `out_len` bins: zero-padding when
/// growing, truncation when shrinking. The shared Nyquist bin is split or
/// folded so real signals stay real and up/down round trips are exact.
pub(crate) fn regrid_spectrum(spec: &[Complex64], out_len: usize) -> Vec<Complex64> {
    let n = spec.len();
    let m = n.min(out_len);
    let mut out = vec![Complex64::default(); out_len];
    let half = m.div_ceil(2);
    // non-negative bins below the shared Nyquist
    out[..half].copy_from_slice(&spec[..half]);
    // negative bins
    for k in 1..half {
        out[out_len - k] = spec[n - k];
    }
    if m % 2 == 0 && m > 0 {
        let k = m / 2;
        if out_len > n {
            let v = spec[k] * 0.5;
            out[k] = v;
            out[out_len - k] = v;
        } else if out_len < n {
            out[k] = spec[k] + spec[n - k];
        } else {
            out[k] = spec[k];
        }
    }
    let scale = out_len as f64 / n as f64;
    out.iter_mut().for_each(|x| *x *= scale);
    out
}

/// Block resampling by the rational factor `p/q` in the frequency domain.
///
/// The input is treated as one period of a periodic signal, so the output has
/// exactly `len * p / q` samples; that count must be an integer.
pub fn resample(signal: &SampleBuffer, p: usize, q: usize) -> Result<SampleBuffer> {
    if p == 0 || q == 0 {
        return Err(invalid("ratio", format!("{p}/{q} must have p, q >= 1")));
    }
    if p == q {
        return Ok(signal.clone());
    }
    let n = signal.len();
    if (n * p) % q != 0 {
        return Err(invalid(
            "ratio",
            format!("block of {n} samples cannot be resampled by {p}/{q} to an integer length"),
        ));
    }
    let out_len = n * p / q;
    let spec = dft_real(signal.samples());
    let out = idft_real(&regrid_spectrum(&spec, out_len));
    SampleBuffer::new(out, signal.sample_rate() * p as f64 / q as f64)
}

/// Keeps every `factor`-th sample starting at `phase`.
pub fn decimate(signal: &SampleBuffer, factor: usize, phase: usize) -> Result<SampleBuffer> {
    if factor == 0 {
        return Err(invalid("factor", "decimation factor must be >= 1"));
    }
    let out: Vec<f64> = signal
        .samples()
        .iter()
        .skip(phase)
        .step_by(factor)
        .copied()
        .collect();
    SampleBuffer::new(out, signal.sample_rate() / factor as f64)
}
