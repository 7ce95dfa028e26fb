use imdd::dmt::*;
use imdd::sigproc::SampleBuffer;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_bits(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..2u8)).collect()
}

fn errors(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn exact() -> DmtConfig {
    DmtConfig {
        clipping_ratio_db: None,
        dac_bits: None,
        ..DmtConfig::default()
    }
}

/// Causal circular convolution.
fn circular_conv(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| h.iter().enumerate().map(|(j, c)| c * x[(i + n - j) % n]).sum())
        .collect()
}

fn gaussian(n: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn mixed_loading(cfg: &DmtConfig) -> LoadingTable {
    // falling SNR so every constellation size appears
    let snr: Vec<f64> = (0..cfg.usable_carriers()).map(|i| 45.0 - 0.15 * i as f64).collect();
    let snr = SnrProfile::new(snr).unwrap();
    let s = ChowSettings {
        max_carriers: Some(cfg.active_carriers()),
        ..Default::default()
    };
    let bits = chow_bit_loading(&snr, rate_to_bits(cfg, cfg.sample_rate), &s).unwrap();
    cioffi_power_loading(&bits, &snr).unwrap()
}

#[test]
fn hermitian_output_is_real() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let c: Vec<Complex64> = (0..255)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let t = hermitian_ifft(&c, 512).unwrap();
    assert!(t.iter().all(|v| v.im.abs() < 1e-12));
}

#[test]
fn frame_geometry() {
    let cfg = DmtConfig::default();
    let loading = LoadingTable::uniform(255, 242, 2).unwrap();
    let bits = random_bits(frame_bits(&loading, &cfg), 1);
    let w = dmt_modulate(&bits, &loading, &cfg).unwrap();
    assert_eq!(w.len(), 128 * 520);
    assert_eq!(w.sample_rate(), 84e9);
    assert!(w.samples().iter().all(|v| v.abs() <= 1.0 + 1e-12));
    assert!(dmt_modulate(&bits[1..], &loading, &cfg).is_err());
}

#[test]
fn loading_hits_rate_target_with_all_sizes() {
    let cfg = DmtConfig::default();
    let l = mixed_loading(&cfg);
    assert_eq!(l.total_bits(), 716);
    for b in 1..=6u8 {
        assert!(l.bits().contains(&b), "no carrier with {b} bits");
    }
}

#[test]
fn loopback_mixed_loading() {
    let cfg = exact();
    let l = mixed_loading(&cfg);
    let bits = random_bits(2 * frame_bits(&l, &cfg), 2);
    let w = dmt_modulate(&bits, &l, &cfg).unwrap();
    let r = dmt_demodulate(&w, &l, &cfg).unwrap();
    assert_eq!(r.sync.frames, 2);
    assert_eq!(errors(&r.bits, &bits), 0);
}

#[test]
fn loopback_default_quantized() {
    let cfg = DmtConfig::default();
    let l = LoadingTable::uniform(255, 242, 4).unwrap();
    let bits = random_bits(frame_bits(&l, &cfg), 3);
    let w = dmt_modulate(&bits, &l, &cfg).unwrap();
    let r = dmt_demodulate(&w, &l, &cfg).unwrap();
    assert_eq!(errors(&r.bits, &bits), 0);
}

#[test]
fn flat_gain_and_delay_removed() {
    let cfg = exact();
    let l = mixed_loading(&cfg);
    let bits = random_bits(frame_bits(&l, &cfg), 5);
    let w = dmt_modulate(&bits, &l, &cfg).unwrap();
    let n = w.len();
    let moved: Vec<f64> = (0..n).map(|i| -0.37 * w.samples()[(i + n - 1234) % n] + 0.2).collect();
    let r = dmt_demodulate(&w.with_samples(moved).unwrap(), &l, &cfg).unwrap();
    assert_eq!(errors(&r.bits, &bits), 0);
}

#[test]
fn dispersion_within_prefix_costs_nothing() {
    let cfg = exact();
    let l = LoadingTable::uniform(255, 242, 4).unwrap();
    let frames = 3;
    let bits = random_bits(frames * frame_bits(&l, &cfg), 6);
    let w = dmt_modulate(&bits, &l, &cfg).unwrap();
    // noise added before the channel keeps the per-carrier SNR of the flat case
    let std = w.rms() * (512.0 / (2.0 * 242.0) / 10f64.powf(1.55)).sqrt();
    let noise = gaussian(w.len(), std, 7);
    let noisy: Vec<f64> = w.samples().iter().zip(&noise).map(|(a, b)| a + b).collect();
    let h = [0.25, 1.0, -0.45, 0.3, 0.1, -0.12, 0.06, 0.04];
    let flat = w.with_samples(noisy.clone()).unwrap();
    let dispersive = w.with_samples(circular_conv(&noisy, &h)).unwrap();
    let e_flat = errors(&dmt_demodulate(&flat, &l, &cfg).unwrap().bits, &bits) as f64;
    let e_disp = errors(&dmt_demodulate(&dispersive, &l, &cfg).unwrap().bits, &bits) as f64;
    assert!(e_flat > 100.0, "too few errors to compare: {e_flat}");
    // two binomial counts on shared noise; allow 4 standard deviations
    assert!((e_disp - e_flat).abs() < 4.0 * (2.0 * e_flat).sqrt(), "{e_flat} vs {e_disp}");
}

#[test]
fn noiseless_snr_hits_ceiling() {
    let cfg = exact();
    let probe = snr_probe_waveform(&cfg, 1).unwrap();
    let snr = estimate_snr(&probe, &cfg).unwrap();
    assert_eq!(snr.len(), 255);
    assert!(snr.snr_db().iter().all(|&v| v == 60.0));
}

#[test]
fn awgn_snr_estimate() {
    let cfg = exact();
    let probe = snr_probe_waveform(&cfg, 1).unwrap();
    let target_db = 20.0;
    let std = probe.rms() * (512.0 / (2.0 * 255.0) / 10f64.powf(target_db / 10.0)).sqrt();
    let noise = gaussian(probe.len(), std, 11);
    let rx = probe
        .with_samples(probe.samples().iter().zip(&noise).map(|(a, b)| a + b).collect())
        .unwrap();
    let snr = estimate_snr(&rx, &cfg).unwrap();
    let mean = snr.snr_db().iter().sum::<f64>() / 255.0;
    assert!((mean - target_db).abs() < 0.5, "mean {mean}");
    // 128 symbols per carrier leave about 0.38 dB of spread on each estimate
    let worst = snr.snr_db().iter().map(|v| (v - target_db).abs()).fold(0.0, f64::max);
    assert!(worst < 1.5, "worst carrier off by {worst} dB");
}

#[test]
fn noise_only_fails_sync() {
    let cfg = DmtConfig::default();
    let n = cfg.frame_length();
    let rx = SampleBuffer::new(gaussian(n, 1.0, 9), 84e9).unwrap();
    match estimate_snr(&rx, &cfg) {
        Err(imdd::Error::SyncFailed { peak, .. }) => assert!(peak < 0.5),
        other => panic!("{other:?}"),
    }
}
