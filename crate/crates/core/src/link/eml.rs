use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sigproc::SampleBuffer;

/// Static optical power (mW) versus modulator voltage: a logistic curve that is
/// linear around `v_mid` and saturates toward 0 and `p_max_mw`.
///
/// Power never rises as the voltage becomes more negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmlCurve {
    pub p_max_mw: f64,
    pub v_mid: f64,
    pub slope_v: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl EmlCurve {
    /// Curve whose inflection sits at `bias` with `power_at_bias_dbm` there.
    pub fn anchored(bias: f64, power_at_bias_dbm: f64, slope_v: f64) -> Self {
        Self {
            p_max_mw: 2.0 * dbm_to_mw(power_at_bias_dbm),
            v_mid: bias,
            slope_v,
            v_min: -3.0,
            v_max: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_max_mw > 0.0) {
            return Err(invalid("p_max_mw", "must be > 0"));
        }
        if !(self.slope_v > 0.0) {
            return Err(invalid("slope_v", "must be > 0"));
        }
        if !(self.v_max > self.v_min) {
            return Err(invalid("v_max", "curve domain is empty"));
        }
        Ok(())
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.v_min..=self.v_max).contains(&v)
    }

    /// Optical power in mW; `v` is clamped to the curve domain.
    pub fn power(&self, v: f64) -> f64 {
        let v = v.clamp(self.v_min, self.v_max);
        self.p_max_mw / (1.0 + (-(v - self.v_mid) / self.slope_v).exp())
    }

    pub fn slope(&self, v: f64) -> f64 {
        let p = self.power(v);
        p * (1.0 - p / self.p_max_mw) / self.slope_v
    }

    /// Voltage producing `power_mw` (clamped into the reachable range).
    pub fn inverse(&self, power_mw: f64) -> f64 {
        let lo = self.power(self.v_min);
        let hi = self.power(self.v_max);
        let p = power_mw.clamp(lo, hi);
        let v = self.v_mid - self.slope_v * (self.p_max_mw / p - 1.0).ln();
        v.clamp(self.v_min, self.v_max)
    }
}

/// Modulator operating point: curve, DC bias and the voltage swing that
/// corresponds to a full-scale (±1) drive sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmlDrive {
    pub curve: EmlCurve,
    pub bias_v: f64,
    pub swing_v: f64,
}

impl Default for EmlDrive {
    fn default() -> Self {
        Self {
            curve: EmlCurve::anchored(-1.25, 1.0, 0.5),
            bias_v: -1.25,
            swing_v: 1.0,
        }
    }
}

impl EmlDrive {
    pub fn power_for_drive(&self, x: f64) -> f64 {
        self.curve.power(self.bias_v + self.swing_v * x)
    }

    pub fn drive_for_power(&self, p: f64) -> f64 {
        (self.curve.inverse(p) - self.bias_v) / self.swing_v
    }
}

pub struct Modulated {
    pub optical: SampleBuffer,
    /// Samples whose voltage fell outside the curve domain.
    pub clamped: usize,
}

/// Sample-wise curve evaluation of `bias + swing · drive`.
pub fn eml_modulate(drive: &SampleBuffer, curve: &EmlCurve, bias: f64, swing: f64) -> Result<Modulated> {
    curve.validate()?;
    if !curve.contains(bias) {
        return Err(invalid(
            "bias",
            format!("{bias} V outside [{}, {}]", curve.v_min, curve.v_max),
        ));
    }
    let mut clamped = 0;
    let out = drive
        .samples()
        .iter()
        .map(|&x| {
            let v = bias + swing * x;
            if !curve.contains(v) {
                clamped += 1;
            }
            curve.power(v)
        })
        .collect();
    Ok(Modulated {
        optical: drive.with_samples(out)?,
        clamped,
    })
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Extinction ratio in dB between two optical power levels.
pub fn extinction_ratio_db(top_mw: f64, bottom_mw: f64) -> f64 {
    10.0 * (top_mw / bottom_mw).log10()
}
