use imdd::dmt::{chow_bit_loading, hermitian_ifft, ChowSettings, SnrProfile};
use imdd::evaluate::{latency_budget, wilson_interval, ChainSpec, LatencyModel};
use imdd::experiment::ExperimentConfig;
use imdd::link::pin_tia_saturation;
use imdd::pam::{pam4_demap, pam4_map, pr_encode, PamMapping};
use imdd::sigproc::{clip, clip_level, clip_to, fft, fir_filter, ifft, quantize, Quantizer, SampleBuffer};
use num_complex::Complex64;
use num_rational::Ratio;
use proptest::collection::vec;
use proptest::prelude::*;

fn buffer(v: Vec<f64>) -> SampleBuffer {
    SampleBuffer::new(v, 84e9).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_round_trip(log2 in 1u32..=12, seed in any::<u64>()) {
        let n = 1usize << log2;
        let x: Vec<Complex64> = (0..n)
            .map(|k| {
                let a = (seed.wrapping_mul(k as u64 + 1) % 1000) as f64 / 500.0 - 1.0;
                Complex64::new(a, (k as f64 * 0.37).sin())
            })
            .collect();
        let back = ifft(&fft(&x).unwrap()).unwrap();
        let err = x.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9);
    }

    #[test]
    fn fir_is_linear(
        x in vec(-1.0f64..1.0, 64),
        y in vec(-1.0f64..1.0, 64),
        taps in vec(-1.0f64..1.0, 1..9),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = fir_filter(&buffer(mix), &taps).unwrap();
        let fx = fir_filter(&buffer(x), &taps).unwrap();
        let fy = fir_filter(&buffer(y), &taps).unwrap();
        for ((l, p), q) in lhs.samples().iter().zip(fx.samples()).zip(fy.samples()) {
            prop_assert!((l - (a * p + b * q)).abs() < 1e-12);
        }
    }

    #[test]
    fn clip_is_idempotent(x in vec(-5.0f64..5.0, 16..256), cr in 0.0f64..20.0) {
        let signal = buffer(x);
        prop_assume!(signal.rms() > 0.0);
        let level = clip_level(&signal, cr).unwrap();
        let once = clip(&signal, cr).unwrap();
        let twice = clip_to(&once, level).unwrap();
        prop_assert_eq!(once.samples(), twice.samples());
    }

    #[test]
    fn quantize_is_monotone(mut x in vec(-2.0f64..2.0, 2..200), bits in 1u32..=12) {
        x.sort_by(f64::total_cmp);
        let q = quantize(&buffer(x), &Quantizer::symmetric(bits, 1.0).unwrap()).unwrap();
        prop_assert!(q.samples().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pam4_map_round_trip(pairs in vec(0u8..4, 1..500)) {
        let bits: Vec<u8> = pairs.iter().flat_map(|p| [p >> 1, p & 1]).collect();
        let m = PamMapping::default();
        let s = pam4_map(&bits, &m).unwrap();
        prop_assert_eq!(pam4_demap(s.indices(), &m), bits);
    }

    #[test]
    fn pr_output_has_seven_levels_and_double_mean(pairs in vec(0u8..4, 2..500)) {
        let bits: Vec<u8> = pairs.iter().flat_map(|p| [p >> 1, p & 1]).collect();
        let s = pam4_map(&bits, &PamMapping::default()).unwrap();
        let y = pr_encode(&s).unwrap();
        prop_assert_eq!(y.alphabet().len(), 7);
        let n = s.len() as f64;
        let mean = |v: Vec<f64>| v.iter().sum::<f64>() / n;
        // only the boundary symbol keeps the sum from being exactly twice
        prop_assert!((mean(y.levels()) - 2.0 * mean(s.levels())).abs() <= 6.0 / n + 1e-12);
    }

    #[test]
    fn hermitian_frames_are_real(c in vec((-1.0f64..1.0, -1.0f64..1.0), 1..=255)) {
        let carriers: Vec<Complex64> = c.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let t = hermitian_ifft(&carriers, 512).unwrap();
        prop_assert!(t.iter().all(|v| v.im.abs() < 1e-12));
    }

    #[test]
    fn chow_is_exact_and_monotone(
        snr in vec(15.0f64..45.0, 16..128),
        fill in 0.05f64..0.3,
    ) {
        let settings = ChowSettings::default();
        let profile = SnrProfile::new(snr.clone()).unwrap();
        let capacity = snr.len() * settings.max_bits as usize;
        let target = ((capacity as f64 * fill) as usize).max(1);
        let table = chow_bit_loading(&profile, target, &settings).unwrap();
        prop_assert_eq!(table.total_bits(), target);
        let b = table.bits();
        for i in 0..snr.len() {
            for j in 0..snr.len() {
                if snr[i] > snr[j] + 1e-9 {
                    prop_assert!(b[i] >= b[j], "snr {} -> {} bits, snr {} -> {} bits", snr[i], b[i], snr[j], b[j]);
                }
            }
        }
    }

    #[test]
    fn wilson_shrinks_as_root_bits(bits in 10_000u64..1_000_000, p in 1e-3f64..0.2) {
        let width = |n: u64| {
            let (lo, hi) = wilson_interval((p * n as f64).round() as u64, n, 1.96);
            hi - lo
        };
        let ratio = width(bits) / width(4 * bits);
        prop_assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn saturation_is_odd_and_monotone(mut x in vec(-3.0f64..3.0, 2..100), knee in 0.05f64..2.0) {
        x.sort_by(f64::total_cmp);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let y = pin_tia_saturation(&buffer(x), knee).unwrap();
        let z = pin_tia_saturation(&buffer(neg), knee).unwrap();
        prop_assert!(y.samples().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(y.samples().iter().zip(z.samples()).all(|(a, b)| (a + b).abs() < 1e-15));
        prop_assert!(y.samples().iter().all(|v| v.abs() <= knee));
    }

    #[test]
    fn ffe_latency_is_exact(taps in 3usize..200) {
        let b = latency_budget(
            &ChainSpec { tx_taps: 0, rx_taps: taps, mlse_memory: None },
            0.0,
            &LatencyModel::default(),
        )
        .unwrap();
        let adds = ((taps - 1) as f64).log2().ceil() as i64;
        prop_assert_eq!(b.dsp_best_ns(), Ratio::from_integer(1));
        prop_assert_eq!(b.dsp_worst_ns(), Ratio::from_integer(1 + adds));
    }

    #[test]
    fn config_round_trip(
        format in prop::sample::select(vec!["dmt", "nyquist_pam4", "pr_pam4"]),
        preset in prop::sample::select(vec!["paper_b2b", "paper_10km", "ideal", "awgn_only"]),
        rops in vec(-10.0f64..0.0, 1..5),
        seed in 0u64..1_000_000,
        blocks in 1usize..16,
        taps in 0usize..30,
        noise in prop::option::of(1e-4f64..1e-2),
        swept in any::<bool>(),
    ) {
        let mut text = format!(
            "name = \"p\"\nformat = \"{format}\"\nseed = {seed}\nblocks = {blocks}\n[channel]\npreset = \"{preset}\"\nrop_dbm = {rops:?}\n"
        );
        if let Some(n) = noise {
            text += &format!("[channel.overrides]\nnoise_std = {n:e}\n");
        }
        if format == "dmt" {
            text += "[dmt]\nfft_length = 1024\n";
        } else {
            text += &format!("[pam]\nrx_taps = {}\n", 2 * taps + 1);
        }
        if swept {
            text += "[sweep.x]\nkey = \"channel.overrides.fiber_km\"\nvalues = [0.0, 5.0]\n";
        }
        let cfg = ExperimentConfig::parse(&text).unwrap();
        prop_assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
