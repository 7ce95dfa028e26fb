use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{dft_real, idft_real};
use super::SampleBuffer;
use crate::error::{invalid, Result};

/// Raised-cosine spectrum with unit gain at DC, `symbol_rate` in Hz.
pub fn raised_cosine_response(f: f64, symbol_rate: f64, beta: f64) -> f64 {
    let t = 1.0 / symbol_rate;
    let af = f.abs();
    let f1 = (1.0 - beta) / (2.0 * t);
    let f2 = (1.0 + beta) / (2.0 * t);
    if beta == 0.0 && af == f2 {
        // brick wall: split the band-edge bin between its two aliases
        0.5
    } else if af <= f1 {
        1.0
    } else if af >= f2 {
        0.0
    } else {
        0.5 * (1.0 + (PI * t / beta * (af - f1)).cos())
    }
}

/// One-sided band edge of a raised-cosine signal, `symbol_rate · (1 + β) / 2`.
/// The two-sided occupied bandwidth is twice this.
pub fn occupied_bandwidth(symbol_rate: f64, beta: f64) -> f64 {
    symbol_rate * (1.0 + beta) / 2.0
}

/// Nyquist pulse shaping in the frequency domain.
///
/// `symbols` holds one sample per symbol; the result runs at `p/q` samples per
/// symbol. The block is treated as periodic, and the raised-cosine spectrum
/// satisfies the folding condition, so sampling the output at symbol instants
/// returns the input levels.
pub fn raised_cosine_shape(
    symbols: &SampleBuffer,
    beta: f64,
    p: usize,
    q: usize,
) -> Result<SampleBuffer> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(invalid("beta", format!("roll-off {beta} outside [0, 1]")));
    }
    if p == 0 || q == 0 {
        return Err(invalid("oversample", "p and q must be >= 1"));
    }
    let os = p as f64 / q as f64;
    if os < 1.0 + beta {
        return Err(invalid(
            "oversample",
            format!("{p}/{q} samples per symbol aliases a roll-off of {beta}"),
        ));
    }
    let n = symbols.len();
    if (n * p) % q != 0 {
        return Err(invalid(
            "oversample",
            format!("{n} symbols at {p}/{q} samples per symbol is not an integer length"),
        ));
    }
    let out_len = n * p / q;
    let symbol_rate = symbols.sample_rate();
    let spacing = symbol_rate / n as f64;
    let spec = dft_real(symbols.samples());
    let mut out = vec![Complex64::default(); out_len];
    for (j, bin) in out.iter_mut().enumerate() {
        let signed = if j <= out_len / 2 {
            j as i64
        } else {
            j as i64 - out_len as i64
        };
        let h = raised_cosine_response(signed as f64 * spacing, symbol_rate, beta);
        if h != 0.0 {
            let src = signed.rem_euclid(n as i64) as usize;
            *bin = spec[src] * (h * os);
        }
    }
    SampleBuffer::new(idft_real(&out), symbol_rate * os)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sigproc::resample::{decimate, resample};

    #[test]
    fn band_edge_at_56_gbd() {
        let bw = occupied_bandwidth(56e9, 0.1);
        assert!((bw - 30.8e9).abs() < 1.0);
    }

    #[test]
    fn rejects_aliasing_oversample() {
        let s = SampleBuffer::new(vec![1.0; 8], 1.0).unwrap();
        assert!(raised_cosine_shape(&s, 0.6, 3, 2).is_err());
        assert!(raised_cosine_shape(&s, 1.5, 2, 1).is_err());
        assert!(raised_cosine_shape(&s, 0.1, 3, 2).is_ok());
    }

    #[test]
    fn zero_rolloff_alternating_is_half_rate_tone() {
        let n = 64;
        let x: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = SampleBuffer::new(x, 1.0).unwrap();
        let y = raised_cosine_shape(&s, 0.0, 4, 1).unwrap();
        // at 4 sps a tone at half the symbol rate has period 8 samples
        for (i, v) in y.samples().iter().enumerate() {
            let expect = (std::f64::consts::PI * i as f64 / 4.0).cos();
            assert!((v - expect).abs() < 1e-9, "i={i} {v} vs {expect}");
        }
    }

    #[test]
    fn symbol_instants_recover_levels() {
        let levels: Vec<f64> = (0..256).map(|i| [-3.0, -1.0, 1.0, 3.0][(i * 7 + i / 3) % 4]).collect();
        let s = SampleBuffer::new(levels.clone(), 56e9).unwrap();
        let y = raised_cosine_shape(&s, 0.1, 3, 2).unwrap();
        assert_eq!(y.len(), 384);
        let two = resample(&y, 4, 3).unwrap();
        let back = decimate(&two, 2, 0).unwrap();
        for (a, b) in back.samples().iter().zip(&levels) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
