use super::channel::{ChannelModel, LinkBudget, Noise};
use super::eml::{EmlCurve, EmlDrive};
use super::response::{tx_component_model, FrequencyResponse, StageGroup, StageShape, TxComponentParams};

pub const PRESET_NAMES: [&str; 5] = ["paper_b2b", "paper_10km", "paper_20km", "ideal", "awgn_only"];

/// Receiver noise standard deviation in photocurrent units (1.0 per mW),
/// fitted so back-to-back Nyquist PAM4 crosses 4.4e-3 in the −5 dBm region.
pub const RECEIVER_NOISE_STD: f64 = 0.0025;

/// Converter noise after the ADC response, same unit.
pub const ADC_NOISE_STD: f64 = 0.005;

/// Anti-alias passband edge and stopband start of the receiving converter.
pub const ADC_PASS_HZ: f64 = 25e9;
pub const ADC_STOP_HZ: f64 = 33e9;

/// Photocurrent (AC part) at which the PIN/TIA compresses.
pub const PIN_TIA_KNEE: f64 = 0.45;

/// Voltage scale of the modulator's logistic power-voltage curve around the
/// −1.25 V bias; with the ±1 V full-scale drive it sets the extinction.
pub const EML_SLOPE_V: f64 = 0.25;

/// SNR of the `awgn_only` preset.
pub const AWGN_PRESET_SNR_DB: f64 = 20.0;

/// Default received optical power for presets whose fiber allows it.
pub const DEFAULT_ROP_DBM: f64 = -5.0;

pub struct PresetInfo {
    pub name: &'static str,
    pub summary: String,
}

fn receiver_stages() -> Vec<FrequencyResponse> {
    vec![FrequencyResponse::new(
        "pin_tia",
        StageGroup::Receiver,
        StageShape::CriticallyDamped {
            bandwidth_hz: 35e9,
            order: 2,
        },
    )]
}

fn adc_stages() -> Vec<FrequencyResponse> {
    vec![
        FrequencyResponse::new(
            "adc",
            StageGroup::Receiver,
            StageShape::CriticallyDamped {
                bandwidth_hz: 18e9,
                order: 2,
            },
        ),
        FrequencyResponse::new(
            "adc_antialias",
            StageGroup::Receiver,
            StageShape::Brickwall {
                pass_hz: ADC_PASS_HZ,
                stop_hz: ADC_STOP_HZ,
                floor_db: -30.0,
            },
        ),
    ]
}

fn paper(fiber_km: f64) -> ChannelModel {
    let budget = LinkBudget {
        fiber_km,
        ..LinkBudget::default()
    };
    let voa = (budget.max_rop_dbm() - DEFAULT_ROP_DBM).max(0.0);
    ChannelModel {
        tx: tx_component_model(&TxComponentParams::default()),
        eml: Some(EmlDrive {
            curve: EmlCurve::anchored(-1.25, 1.0, EML_SLOPE_V),
            ..EmlDrive::default()
        }),
        budget: LinkBudget { voa_db: voa, ..budget },
        rx: receiver_stages(),
        ac_coupled: true,
        saturation_knee: Some(PIN_TIA_KNEE),
        adc: adc_stages(),
        noise: Noise::Thermal {
            std: RECEIVER_NOISE_STD,
        },
        adc_noise_std: ADC_NOISE_STD,
        seed: 0,
    }
}

/// Built-in channel by name.
pub fn preset(name: &str) -> Option<ChannelModel> {
    match name {
        "paper_b2b" => Some(paper(0.0)),
        "paper_10km" => Some(paper(10.0)),
        "paper_20km" => Some(paper(20.0)),
        "ideal" => Some(ChannelModel::ideal()),
        "awgn_only" => Some(ChannelModel {
            noise: Noise::Snr {
                db: AWGN_PRESET_SNR_DB,
            },
            ..ChannelModel::ideal()
        }),
        _ => None,
    }
}

/// Closest built-in name by Jaro-Winkler similarity.
pub fn nearest_preset(name: &str) -> &'static str {
    PRESET_NAMES
        .iter()
        .max_by(|a, b| strsim::jaro_winkler(name, a).total_cmp(&strsim::jaro_winkler(name, b)))
        .copied()
        .unwrap_or(PRESET_NAMES[0])
}

fn summarize(m: &ChannelModel) -> String {
    let stages: Vec<&str> = m
        .tx
        .iter()
        .chain(&m.rx)
        .chain(&m.adc)
        .filter(|s| s.enabled)
        .map(|s| s.name.as_str())
        .collect();
    let noise = match m.noise {
        Noise::None => "none".to_string(),
        Noise::Thermal { std } => format!("thermal std {std}"),
        Noise::Snr { db } => format!("snr {db} dB"),
    };
    let b = &m.budget;
    format!(
        "fiber {} km x {} dB/km, launch {} dBm, voa {:.2} dB (rop {:.2} dBm); eml {}; stages [{}]; saturation {}; noise {}",
        b.fiber_km,
        b.attenuation_db_per_km,
        b.launch_dbm,
        b.voa_db,
        b.rop_dbm(),
        if m.eml.is_some() { "on" } else { "off" },
        stages.join(", "),
        m.saturation_knee
            .map(|k| format!("knee {k}"))
            .unwrap_or_else(|| "off".into()),
        noise
    )
}

pub fn list_presets() -> Vec<PresetInfo> {
    PRESET_NAMES
        .iter()
        .map(|&name| PresetInfo {
            name,
            summary: summarize(&preset(name).expect("listed preset exists")),
        })
        .collect()
}
