//! DSP primitives shared by all three modulation chains.

mod amplitude;
mod buffer;
pub mod fft;
mod filter;
mod resample;
mod sequence;
mod shaping;

pub use amplitude::{clip, clip_level, clip_to, quantize, quantize_codes, Quantizer};
pub use buffer::{ComplexSpectrum, SampleBuffer, SymbolSequence};
pub use fft::{fft, fft_real, ifft};
pub use filter::{apply_frequency_response, circular_fir_centered, fir_filter, fractional_delay};
pub use resample::{decimate, resample};
pub use sequence::{debruijn_sequence, debruijn_sequence_capped, prbs31_bits, MAX_SEQUENCE_LEN};
pub use shaping::{occupied_bandwidth, raised_cosine_response, raised_cosine_shape};

/// Power spectral density estimate of a periodic block: `(frequency Hz, |X|²/N)`
/// for the non-negative bins.
pub fn block_psd(signal: &SampleBuffer) -> Vec<(f64, f64)> {
    let n = signal.len();
    let spec = fft::dft_real(signal.samples());
    let spacing = signal.sample_rate() / n as f64;
    (0..=n / 2)
        .map(|k| (k as f64 * spacing, spec[k].norm_sqr() / n as f64))
        .collect()
}
