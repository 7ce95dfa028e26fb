use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::DmtConfig;
use super::loading::{LoadingTable, SnrProfile};
use super::qam::{bits_from_label, constellation, label_from_bits, nearest_label};
use crate::error::{invalid, Error, Result};
use crate::sigproc::fft::circular_xcorr;
use crate::sigproc::{clip_level, clip_to, fft, ifft, quantize, Quantizer, SampleBuffer};

const TRAINING_SEED: u64 = 0x7a11_0c0d;
const PROBE_SEED: u64 = 0x5_11_e5;

/// Real-valued DMT symbol: carriers `1..=len` of `carriers` placed on the
/// positive bins, their conjugates on the mirror bins, DC and Nyquist empty.
/// Returns the complex IFFT output, whose imaginary part vanishes.
pub fn hermitian_ifft(carriers: &[Complex64], fft_length: usize) -> Result<Vec<Complex64>> {
    if carriers.len() > fft_length / 2 - 1 {
        return Err(invalid(
            "carriers",
            format!("{} carriers exceed {} usable bins", carriers.len(), fft_length / 2 - 1),
        ));
    }
    let mut bins = vec![Complex64::new(0.0, 0.0); fft_length];
    for (i, c) in carriers.iter().enumerate() {
        bins[i + 1] = *c;
        bins[fft_length - i - 1] = c.conj();
    }
    ifft(&bins)
}

/// Unit-power QPSK on every usable carrier, fixed per training symbol index.
fn training_carriers(cfg: &DmtConfig) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(TRAINING_SEED);
    let qpsk = constellation(2);
    (0..cfg.training_symbols)
        .map(|_| {
            (0..cfg.usable_carriers())
                .map(|_| qpsk[rng.random_range(0..4)])
                .collect()
        })
        .collect()
}

fn check_loading(loading: &LoadingTable, cfg: &DmtConfig) -> Result<()> {
    loading.validate()?;
    if loading.len() != cfg.usable_carriers() {
        return Err(Error::LengthMismatch {
            expected: cfg.usable_carriers(),
            actual: loading.len(),
        });
    }
    if let Some(i) = loading.bits()[cfg.active_carriers()..].iter().position(|&b| b > 0) {
        return Err(invalid(
            "loading",
            format!("carrier {} lies beyond the {} used carriers", cfg.active_carriers() + i + 1, cfg.active_carriers()),
        ));
    }
    if loading.total_bits() == 0 {
        return Err(invalid("loading", "no carrier carries bits"));
    }
    Ok(())
}

/// Bits one frame carries.
pub fn frame_bits(loading: &LoadingTable, cfg: &DmtConfig) -> usize {
    cfg.data_symbols * loading.total_bits()
}

fn push_symbol(out: &mut Vec<f64>, carriers: &[Complex64], cfg: &DmtConfig) -> Result<()> {
    let body = hermitian_ifft(carriers, cfg.fft_length)?;
    let cp = cfg.cp_length();
    out.extend(body[cfg.fft_length - cp..].iter().map(|c| c.re));
    out.extend(body.iter().map(|c| c.re));
    Ok(())
}

/// Frames of 4 training and 124 data symbols, each prefixed with its cyclic
/// prefix, normalized to unit RMS, clipped and quantized into `[-1, 1]`.
///
/// `bits` may hold any whole number of frames.
pub fn dmt_modulate(bits: &[u8], loading: &LoadingTable, cfg: &DmtConfig) -> Result<SampleBuffer> {
    cfg.validate()?;
    check_loading(loading, cfg)?;
    let per_frame = frame_bits(loading, cfg);
    if bits.is_empty() || bits.len() % per_frame != 0 {
        return Err(Error::LengthMismatch {
            expected: per_frame,
            actual: bits.len(),
        });
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(invalid("bits", format!("value {b} is not a bit")));
    }
    let frames = bits.len() / per_frame;
    let training = training_carriers(cfg);
    let gains: Vec<f64> = loading.power().iter().map(|p| p.sqrt()).collect();
    let mut samples = Vec::with_capacity(frames * cfg.frame_length());
    let mut cursor = 0;
    let mut carriers = vec![Complex64::new(0.0, 0.0); cfg.usable_carriers()];
    for _ in 0..frames {
        for t in &training {
            push_symbol(&mut samples, t, cfg)?;
        }
        for _ in 0..cfg.data_symbols {
            for (k, &b) in loading.bits().iter().enumerate() {
                carriers[k] = if b == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let label = label_from_bits(&bits[cursor..cursor + b as usize]);
                    cursor += b as usize;
                    constellation(b)[label] * gains[k]
                };
            }
            push_symbol(&mut samples, &carriers, cfg)?;
        }
    }
    let raw = SampleBuffer::new(samples, cfg.sample_rate)?;
    let rms = raw.rms();
    if rms == 0.0 {
        return Err(Error::ZeroPower);
    }
    let unit = raw.with_samples(raw.samples().iter().map(|v| v / rms).collect())?;
    let (shaped, full_scale) = match cfg.clipping_ratio_db {
        Some(cr) => {
            let level = clip_level(&unit, cr)?;
            (clip_to(&unit, level)?, level)
        }
        None => {
            let peak = unit.peak();
            (unit, peak)
        }
    };
    let coded = match cfg.dac_bits {
        Some(b) => quantize(&shaped, &Quantizer::symmetric(b, full_scale)?)?,
        None => shaped,
    };
    coded.with_samples(coded.samples().iter().map(|v| v / full_scale).collect())
}

/// Fixed pseudo-random bits for `frames` SNR-probe frames.
pub fn snr_probe_bits(cfg: &DmtConfig, frames: usize) -> Result<Vec<u8>> {
    let loading = snr_probe_loading(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    Ok((0..frames * frame_bits(&loading, cfg))
        .map(|_| rng.random_range(0..2u8))
        .collect())
}

/// Equal-power 16-QAM on every usable carrier.
pub fn snr_probe_loading(cfg: &DmtConfig) -> Result<LoadingTable> {
    let n = cfg.usable_carriers();
    LoadingTable::uniform(n, n, 4)
}

/// Probe waveform whose reception [`estimate_snr`] evaluates.
pub fn snr_probe_waveform(cfg: &DmtConfig, frames: usize) -> Result<SampleBuffer> {
    let probe_cfg = DmtConfig {
        used_carriers: Some(cfg.usable_carriers()),
        ..cfg.clone()
    };
    dmt_modulate(&snr_probe_bits(cfg, frames)?, &snr_probe_loading(cfg)?, &probe_cfg)
}

/// Frame timing found by training correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSync {
    /// First sample of the first frame's first FFT window.
    pub start: usize,
    pub frames: usize,
    /// Normalized correlation peak, 1 for a perfect match.
    pub peak: f64,
}

/// Demodulated carriers, `[symbol][carrier]`, for one frame with its FFT
/// windows starting at `window_start`.
fn frame_spectra(rx: &[f64], window_start: usize, cfg: &DmtConfig) -> Result<Vec<Vec<Complex64>>> {
    let n = rx.len();
    let usable = cfg.usable_carriers();
    (0..cfg.frame_symbols())
        .map(|s| {
            let at = window_start + s * cfg.symbol_length();
            let body: Vec<Complex64> = (0..cfg.fft_length)
                .map(|i| Complex64::new(rx[(at + i) % n], 0.0))
                .collect();
            Ok(fft(&body)?[1..=usable].to_vec())
        })
        .collect()
}

/// Per-carrier channel estimate from the training symbols.
fn training_estimate(spectra: &[Vec<Complex64>], training: &[Vec<Complex64>]) -> Vec<Complex64> {
    let usable = training[0].len();
    (0..usable)
        .map(|k| {
            let num: Complex64 = training.iter().zip(spectra).map(|(t, y)| y[k] * t[k].conj()).sum();
            let den: f64 = training.iter().map(|t| t[k].norm_sqr()).sum();
            num / den
        })
        .collect()
}

/// Locates frame boundaries by correlating against the training symbols,
/// then moves the FFT window so the estimated impulse response falls inside
/// the cyclic prefix.
pub fn synchronize(rx: &SampleBuffer, cfg: &DmtConfig) -> Result<FrameSync> {
    cfg.validate()?;
    let n = rx.len();
    let frame = cfg.frame_length();
    if n < frame || n % frame != 0 {
        return Err(Error::LengthMismatch {
            expected: frame,
            actual: n,
        });
    }
    let training = training_carriers(cfg);
    let mut template = Vec::with_capacity(n);
    for t in &training {
        push_symbol(&mut template, t, cfg)?;
    }
    let len = template.len();
    let t_energy: f64 = template.iter().map(|v| v * v).sum();
    template.resize(n, 0.0);

    let mean = rx.mean();
    let x: Vec<f64> = rx.samples().iter().map(|v| v - mean).collect();
    let r = circular_xcorr(&x, &template);
    // all frames share the training, so fold the correlation onto one frame
    let folded: Vec<f64> = (0..frame).map(|i| (0..n / frame).map(|j| r[i + j * frame]).sum()).collect();
    let lag = (0..frame).max_by(|&a, &b| folded[a].abs().total_cmp(&folded[b].abs())).unwrap_or(0);
    let window_energy: f64 = (0..n / frame)
        .map(|j| (0..len).map(|i| x[(lag + j * frame + i) % n].powi(2)).sum::<f64>())
        .sum();
    let peak = if window_energy > 0.0 {
        folded[lag].abs() / (t_energy * (n / frame) as f64 * window_energy).sqrt()
    } else {
        0.0
    };
    if !(peak >= cfg.sync_threshold) {
        return Err(Error::SyncFailed {
            peak,
            threshold: cfg.sync_threshold,
        });
    }

    // fine timing: impulse response of the training estimate
    let coarse = lag + cfg.cp_length();
    let spectra = frame_spectra(&x, coarse, cfg)?;
    let h_est = training_estimate(&spectra[..cfg.training_symbols], &training);
    let mut bins = vec![Complex64::new(0.0, 0.0); cfg.fft_length];
    for (k, h) in h_est.iter().enumerate() {
        bins[k + 1] = *h;
        bins[cfg.fft_length - k - 1] = h.conj();
    }
    let h = ifft(&bins)?;
    let energy: Vec<f64> = h.iter().map(|c| c.norm_sqr()).collect();
    let span = cfg.cp_length() + 1;
    let nfft = cfg.fft_length;
    let window = |m: usize| (0..span).map(|i| energy[(m + i) % nfft]).sum::<f64>();
    let best = (0..nfft)
        .max_by(|&a, &b| window(a).total_cmp(&window(b)))
        .unwrap_or(0);
    let shift = if best < nfft / 2 { best as isize } else { best as isize - nfft as isize };
    let start = (coarse as isize + shift).rem_euclid(n as isize) as usize;
    Ok(FrameSync {
        start,
        frames: n / frame,
        peak,
    })
}

#[derive(Debug, Clone)]
pub struct DmtReception {
    pub bits: Vec<u8>,
    /// Mean squared error-vector magnitude per carrier relative to the
    /// unit-energy constellation; zero for unloaded carriers.
    pub evm: Vec<f64>,
    pub sync: FrameSync,
}

impl DmtReception {
    /// Per-carrier SNR implied by the EVM, in dB.
    pub fn snr_db(&self) -> Vec<f64> {
        self.evm
            .iter()
            .map(|&e| if e > 0.0 { -10.0 * e.log10() } else { f64::INFINITY })
            .collect()
    }
}

/// Synchronization → CP removal → FFT → training-initialized 1-tap
/// equalizer with decision-directed LMS updates → demapping.
pub fn dmt_demodulate(rx: &SampleBuffer, loading: &LoadingTable, cfg: &DmtConfig) -> Result<DmtReception> {
    check_loading(loading, cfg)?;
    let sync = synchronize(rx, cfg)?;
    let training = training_carriers(cfg);
    let usable = cfg.usable_carriers();
    let mean = rx.mean();
    let x: Vec<f64> = rx.samples().iter().map(|v| v - mean).collect();
    let mut bits = Vec::with_capacity(sync.frames * frame_bits(loading, cfg));
    let mut err = vec![0.0; usable];
    let mut count = 0usize;
    let mu = cfg.equalizer_mu;
    for f in 0..sync.frames {
        let spectra = frame_spectra(&x, sync.start + f * cfg.frame_length(), cfg)?;
        let h = training_estimate(&spectra[..cfg.training_symbols], &training);
        let mut w: Vec<Complex64> = h
            .iter()
            .zip(loading.power())
            .map(|(h, p)| if *p > 0.0 && h.norm_sqr() > 0.0 { 1.0 / (h * p.sqrt()) } else { Complex64::new(0.0, 0.0) })
            .collect();
        for y in &spectra[cfg.training_symbols..] {
            for (k, &b) in loading.bits().iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let z = w[k] * y[k];
                let label = nearest_label(z, b);
                let d = constellation(b)[label];
                let e = d - z;
                err[k] += e.norm_sqr();
                let py = y[k].norm_sqr();
                if py > 0.0 {
                    w[k] += mu * e * y[k].conj() / py;
                }
                bits_from_label(label, b, &mut bits);
            }
            count += 1;
        }
    }
    let evm = err
        .iter()
        .zip(loading.bits())
        .map(|(e, &b)| if b > 0 { e / count as f64 } else { 0.0 })
        .collect();
    Ok(DmtReception { bits, evm, sync })
}

/// Per-carrier SNR of a received probe ([`snr_probe_waveform`]): signal power
/// over error-vector power after a least-squares 1-tap estimate on the known
/// training and probe symbols, bounded to `±cfg.snr_ceiling_db`.
pub fn estimate_snr(rx: &SampleBuffer, cfg: &DmtConfig) -> Result<SnrProfile> {
    let sync = synchronize(rx, cfg)?;
    let usable = cfg.usable_carriers();
    let training = training_carriers(cfg);
    let bits = snr_probe_bits(cfg, sync.frames)?;
    let qam = constellation(4);
    let data: Vec<Complex64> = bits.chunks(4).map(|c| qam[label_from_bits(c)]).collect();
    let mean = rx.mean();
    let x: Vec<f64> = rx.samples().iter().map(|v| v - mean).collect();

    let mut known: Vec<Vec<Complex64>> = Vec::new();
    let mut received: Vec<Vec<Complex64>> = Vec::new();
    for f in 0..sync.frames {
        let spectra = frame_spectra(&x, sync.start + f * cfg.frame_length(), cfg)?;
        known.extend(training.iter().cloned());
        let base = f * cfg.data_symbols * usable;
        for s in 0..cfg.data_symbols {
            known.push(data[base + s * usable..base + (s + 1) * usable].to_vec());
        }
        received.extend(spectra);
    }
    let ceiling = cfg.snr_ceiling_db;
    let snr = (0..usable)
        .map(|k| {
            let num: Complex64 = known.iter().zip(&received).map(|(t, y)| y[k] * t[k].conj()).sum();
            let sig: f64 = known.iter().map(|t| t[k].norm_sqr()).sum();
            let h = num / sig;
            let noise: f64 = known.iter().zip(&received).map(|(t, y)| (y[k] - h * t[k]).norm_sqr()).sum();
            let db = 10.0 * (h.norm_sqr() * sig / noise).log10();
            if db.is_nan() {
                -ceiling
            } else {
                db.clamp(-ceiling, ceiling)
            }
        })
        .collect();
    SnrProfile::new(snr)
}
