use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which physical block a stage belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageGroup {
    /// DAC, hold droop, driver and cabling: what the pre-emphasis trainer observes.
    Electrical,
    /// Small-signal response of the modulator.
    Modulator,
    /// Clock-line coupling of the converters.
    Clock,
    /// Photodiode, TIA and ADC front end.
    Receiver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StageShape {
    /// `order` cascaded real poles placed so the magnitude is −3 dB at `bandwidth_hz`.
    CriticallyDamped { bandwidth_hz: f64, order: u32 },
    /// Butterworth low-pass with −3 dB at `bandwidth_hz`.
    Butterworth { bandwidth_hz: f64, order: u32 },
    /// Zero-order-hold droop `sinc(f / fs)` with its half-sample delay.
    ZeroOrderHold { sample_rate_hz: f64 },
    /// Skin-effect cable loss, `loss_db · sqrt(f / reference_hz)`.
    Cable { loss_db: f64, reference_hz: f64 },
    /// Gaussian-in-dB magnitude dip of `depth_db` at ±`center_hz`, zero phase.
    Dip {
        center_hz: f64,
        depth_db: f64,
        width_hz: f64,
    },
    /// Zero-phase anti-alias filter: unity to `pass_hz`, a raised-cosine
    /// transition in dB down to `floor_db` at `stop_hz`.
    Brickwall { pass_hz: f64, stop_hz: f64, floor_db: f64 },
    Flat,
}

/// One named, toggleable stage of a frequency-response cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyResponse {
    pub name: String,
    pub group: StageGroup,
    pub shape: StageShape,
    pub enabled: bool,
}

impl FrequencyResponse {
    pub fn new(name: &str, group: StageGroup, shape: StageShape) -> Self {
        Self {
            name: name.to_string(),
            group,
            shape,
            enabled: true,
        }
    }

    /// Complex gain at signed frequency `f` in Hz; unity when disabled.
    pub fn response(&self, f: f64) -> Complex64 {
        if !self.enabled {
            return Complex64::new(1.0, 0.0);
        }
        match self.shape {
            StageShape::CriticallyDamped {
                bandwidth_hz,
                order,
            } => {
                let n = order.max(1) as f64;
                let corner = bandwidth_hz / (2f64.powf(1.0 / n) - 1.0).sqrt();
                Complex64::new(1.0, f / corner).powf(-n)
            }
            StageShape::Butterworth {
                bandwidth_hz,
                order,
            } => {
                let n = order.max(1);
                let s = Complex64::new(0.0, f / bandwidth_hz);
                (0..n).fold(Complex64::new(1.0, 0.0), |acc, k| {
                    let theta = PI * (2 * k + n + 1) as f64 / (2 * n) as f64;
                    let pole = Complex64::from_polar(1.0, theta);
                    acc * (-pole) / (s - pole)
                })
            }
            StageShape::ZeroOrderHold { sample_rate_hz } => {
                let x = f / sample_rate_hz;
                let mag = if x == 0.0 {
                    1.0
                } else {
                    (PI * x).sin() / (PI * x)
                };
                Complex64::from_polar(mag, -PI * x)
            }
            StageShape::Cable {
                loss_db,
                reference_hz,
            } => Complex64::new(db_to_amplitude(-loss_db * (f.abs() / reference_hz).sqrt()), 0.0),
            StageShape::Dip {
                center_hz,
                depth_db,
                width_hz,
            } => {
                let g = |f: f64| -depth_db * (-0.5 * ((f.abs() - center_hz) / width_hz).powi(2)).exp();
                // renormalized so the DC gain is exactly one
                Complex64::new(db_to_amplitude(g(f) - g(0.0)), 0.0)
            }
            StageShape::Brickwall {
                pass_hz,
                stop_hz,
                floor_db,
            } => {
                let t = ((f.abs() - pass_hz) / (stop_hz - pass_hz).max(f64::MIN_POSITIVE)).clamp(0.0, 1.0);
                Complex64::new(db_to_amplitude(floor_db * 0.5 * (1.0 - (PI * t).cos())), 0.0)
            }
            StageShape::Flat => Complex64::new(1.0, 0.0),
        }
    }

    pub fn magnitude_db(&self, f: f64) -> f64 {
        20.0 * self.response(f).norm().log10()
    }
}

pub(crate) fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Product of all enabled stages.
pub fn cascade_response(stages: &[FrequencyResponse], f: f64) -> Complex64 {
    stages
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(f))
}

pub fn cascade_magnitude_db(stages: &[FrequencyResponse], f: f64) -> f64 {
    20.0 * cascade_response(stages, f).norm().log10()
}

/// Parameters of the transmitter component cascade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TxComponentParams {
    pub dac_bandwidth_hz: f64,
    pub dac_sample_rate_hz: f64,
    pub driver_bandwidth_hz: f64,
    pub cable_loss_db: f64,
    pub cable_reference_hz: f64,
    pub eml_bandwidth_hz: f64,
    pub eml_dip_hz: f64,
    pub eml_dip_depth_db: f64,
    pub eml_dip_width_hz: f64,
    pub clock_notch_hz: f64,
    pub clock_notch_depth_db: f64,
    pub clock_notch_width_hz: f64,
    pub zero_order_hold: bool,
    pub eml_dip: bool,
    pub clock_notch: bool,
}

impl Default for TxComponentParams {
    fn default() -> Self {
        Self {
            dac_bandwidth_hz: 15e9,
            dac_sample_rate_hz: 84e9,
            driver_bandwidth_hz: 25e9,
            cable_loss_db: 0.5,
            cable_reference_hz: 28e9,
            eml_bandwidth_hz: 27e9,
            eml_dip_hz: 7e9,
            eml_dip_depth_db: 3.0,
            eml_dip_width_hz: 3e9,
            clock_notch_hz: 21e9,
            clock_notch_depth_db: 15.0,
            clock_notch_width_hz: 0.02e9,
            zero_order_hold: true,
            eml_dip: true,
            clock_notch: true,
        }
    }
}

/// Transmitter cascade: DAC, hold droop, driver, cable, modulator roll-off,
/// the modulator's low-frequency dip and the clock-line notch.
pub fn tx_component_model(p: &TxComponentParams) -> Vec<FrequencyResponse> {
    use StageGroup::*;
    use StageShape::*;
    let mut zoh = FrequencyResponse::new(
        "dac_hold",
        Electrical,
        ZeroOrderHold {
            sample_rate_hz: p.dac_sample_rate_hz,
        },
    );
    zoh.enabled = p.zero_order_hold;
    let mut dip = FrequencyResponse::new(
        "eml_dip",
        Modulator,
        Dip {
            center_hz: p.eml_dip_hz,
            depth_db: p.eml_dip_depth_db,
            width_hz: p.eml_dip_width_hz,
        },
    );
    dip.enabled = p.eml_dip;
    let mut notch = FrequencyResponse::new(
        "clock_notch",
        Clock,
        Dip {
            center_hz: p.clock_notch_hz,
            depth_db: p.clock_notch_depth_db,
            width_hz: p.clock_notch_width_hz,
        },
    );
    notch.enabled = p.clock_notch;
    vec![
        FrequencyResponse::new(
            "dac",
            Electrical,
            CriticallyDamped {
                bandwidth_hz: p.dac_bandwidth_hz,
                order: 2,
            },
        ),
        zoh,
        FrequencyResponse::new(
            "driver",
            Electrical,
            CriticallyDamped {
                bandwidth_hz: p.driver_bandwidth_hz,
                order: 2,
            },
        ),
        FrequencyResponse::new(
            "cable",
            Electrical,
            Cable {
                loss_db: p.cable_loss_db,
                reference_hz: p.cable_reference_hz,
            },
        ),
        FrequencyResponse::new(
            "eml",
            Modulator,
            CriticallyDamped {
                bandwidth_hz: p.eml_bandwidth_hz,
                order: 1,
            },
        ),
        dip,
        notch,
    ]
}

/// The subset of a cascade belonging to one group.
pub fn stages_in(stages: &[FrequencyResponse], group: StageGroup) -> Vec<FrequencyResponse> {
    stages.iter().filter(|s| s.group == group).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_disabled() -> Vec<FrequencyResponse> {
        let mut c = tx_component_model(&TxComponentParams::default());
        c.iter_mut().for_each(|s| s.enabled = false);
        c
    }

    #[test]
    fn three_db_points() {
        for order in 1..=4 {
            let s = FrequencyResponse::new(
                "lp",
                StageGroup::Electrical,
                StageShape::CriticallyDamped {
                    bandwidth_hz: 15e9,
                    order,
                },
            );
            assert!((s.magnitude_db(15e9) + 3.0103).abs() < 1e-3);
            assert!((s.magnitude_db(0.0)).abs() < 1e-12);
            let b = FrequencyResponse::new(
                "bw",
                StageGroup::Receiver,
                StageShape::Butterworth {
                    bandwidth_hz: 18e9,
                    order,
                },
            );
            assert!((b.magnitude_db(18e9) + 3.0103).abs() < 1e-3);
            assert!((b.response(0.0) - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn unit_dc_gain_everywhere() {
        for s in tx_component_model(&TxComponentParams::default()) {
            assert!((s.response(0.0).norm() - 1.0).abs() < 1e-12, "{}", s.name);
        }
    }

    #[test]
    fn hermitian_responses() {
        for s in tx_component_model(&TxComponentParams::default()) {
            for f in [1e9, 7e9, 21e9, 33e9] {
                assert!((s.response(-f) - s.response(f).conj()).norm() < 1e-12, "{}", s.name);
            }
        }
    }

    #[test]
    fn disabled_is_flat() {
        let c = all_disabled();
        for f in [0.0, 5e9, 21e9, 40e9] {
            assert!((cascade_response(&c, f) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dip_near_seven_ghz() {
        let c = tx_component_model(&TxComponentParams::default());
        let at = |f| cascade_magnitude_db(&c, f);
        assert!(at(7e9) < at(5e9) - 0.5);
        let p = TxComponentParams::default();
        let without = tx_component_model(&TxComponentParams { eml_dip: false, ..p });
        let depth = cascade_magnitude_db(&without, 7e9) - at(7e9);
        let dc_lift = 3.0 * (-0.5 * (7e9_f64 / 3e9).powi(2)).exp();
        assert!((depth - (3.0 - dc_lift)).abs() < 1e-9, "depth {depth}");
    }

    #[test]
    fn clock_notch_depth() {
        let c = tx_component_model(&TxComponentParams::default());
        let drop = cascade_magnitude_db(&c, 20e9) - cascade_magnitude_db(&c, 21e9);
        assert!(drop > 15.0, "notch only {drop} dB");
        let mut p = TxComponentParams::default();
        p.clock_notch = false;
        let c = tx_component_model(&p);
        let drop = cascade_magnitude_db(&c, 20e9) - cascade_magnitude_db(&c, 21e9);
        assert!(drop < 2.0);
    }
}
