use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::eml::{dbm_to_mw, EmlDrive};
use super::response::{cascade_response, FrequencyResponse};
use crate::error::{invalid, Error, Result};
use crate::sigproc::{apply_frequency_response, SampleBuffer};

/// Fiber, attenuator and launch power. ROP = launch − length · coefficient − VOA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudget {
    pub fiber_km: f64,
    pub attenuation_db_per_km: f64,
    pub voa_db: f64,
    pub launch_dbm: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            fiber_km: 0.0,
            attenuation_db_per_km: 0.32,
            voa_db: 0.0,
            launch_dbm: 1.0,
        }
    }
}

impl LinkBudget {
    pub fn fiber_loss_db(&self) -> f64 {
        self.fiber_km * self.attenuation_db_per_km
    }

    pub fn total_loss_db(&self) -> f64 {
        self.fiber_loss_db() + self.voa_db
    }

    pub fn rop_dbm(&self) -> f64 {
        self.launch_dbm - self.total_loss_db()
    }

    /// Highest ROP the fiber allows (VOA at 0 dB).
    pub fn max_rop_dbm(&self) -> f64 {
        self.launch_dbm - self.fiber_loss_db()
    }

    /// Sets the VOA so the link delivers `rop_dbm`.
    pub fn with_rop(&self, rop_dbm: f64) -> Result<Self> {
        let voa = self.max_rop_dbm() - rop_dbm;
        // tolerate rounding at the VOA = 0 edge
        if voa < -1e-9 {
            return Err(Error::UnreachableRop {
                requested_dbm: rop_dbm,
                max_dbm: self.max_rop_dbm(),
            });
        }
        Ok(Self {
            voa_db: voa.max(0.0),
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.fiber_km < 0.0 {
            return Err(invalid("fiber_km", "must be >= 0"));
        }
        if self.attenuation_db_per_km < 0.0 {
            return Err(invalid("attenuation_db_per_km", "must be >= 0"));
        }
        if self.voa_db < 0.0 {
            return Err(invalid("voa_db", "must be >= 0"));
        }
        Ok(())
    }
}

/// Receiver noise at the TIA output, ahead of the ADC response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Noise {
    None,
    /// Signal-independent Gaussian noise with this standard deviation, in the
    /// normalized photocurrent unit (1.0 per mW).
    Thermal { std: f64 },
    /// Gaussian noise scaled to the block's own signal power.
    Snr { db: f64 },
}

/// Memoryless compression of the TIA: `knee · tanh(x / knee)`.
///
/// Linear for |x| ≪ knee, asymptotic to ±knee, odd and monotone.
pub fn pin_tia_saturation(signal: &SampleBuffer, knee: f64) -> Result<SampleBuffer> {
    if !(knee > 0.0) {
        return Err(invalid("knee", "saturation knee must be > 0"));
    }
    signal.with_samples(
        signal
            .samples()
            .iter()
            .map(|&x| knee * (x / knee).tanh())
            .collect(),
    )
}

/// The simulated testbed, applied in a fixed order:
/// Tx responses → modulator → link budget → PIN/TIA response → AC coupling →
/// saturation → receiver noise → ADC response → ADC noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub tx: Vec<FrequencyResponse>,
    /// `None` bypasses the modulator: the electrical waveform passes through unchanged.
    pub eml: Option<EmlDrive>,
    pub budget: LinkBudget,
    pub rx: Vec<FrequencyResponse>,
    /// Removes the block mean after photodetection.
    pub ac_coupled: bool,
    pub saturation_knee: Option<f64>,
    pub adc: Vec<FrequencyResponse>,
    pub noise: Noise,
    /// White noise after the ADC response (quantization and converter noise),
    /// same unit as thermal noise.
    #[serde(default)]
    pub adc_noise_std: f64,
    pub seed: u64,
}

impl ChannelModel {
    /// All stages flat, no modulator, no noise: `apply_channel` is the identity.
    pub fn ideal() -> Self {
        Self {
            tx: Vec::new(),
            eml: None,
            budget: LinkBudget::default(),
            rx: Vec::new(),
            ac_coupled: false,
            saturation_knee: None,
            adc: Vec::new(),
            noise: Noise::None,
            adc_noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_rop(&self, rop_dbm: f64) -> Result<Self> {
        Ok(Self {
            budget: self.budget.with_rop(rop_dbm)?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if let Some(k) = self.saturation_knee {
            if !(k > 0.0) {
                return Err(invalid("saturation_knee", "must be > 0"));
            }
        }
        if let Some(e) = &self.eml {
            e.curve.validate()?;
        }
        if !(self.adc_noise_std >= 0.0) {
            return Err(invalid("adc_noise_std", "must be >= 0"));
        }
        match self.noise {
            Noise::Thermal { std } if !(std >= 0.0) => Err(invalid("noise", "std must be >= 0")),
            Noise::Snr { db } if !db.is_finite() => Err(invalid("noise", "SNR must be finite")),
            _ => Ok(()),
        }
    }

    /// Composite small-signal response of the linear stages (Tx, PIN/TIA, ADC).
    pub fn linear_response(&self, f: f64) -> num_complex::Complex64 {
        cascade_response(&self.tx, f) * cascade_response(&self.rx, f) * cascade_response(&self.adc, f)
    }
}

fn filter_stages(signal: SampleBuffer, stages: &[FrequencyResponse]) -> Result<SampleBuffer> {
    if stages.iter().all(|s| !s.enabled) {
        return Ok(signal);
    }
    apply_frequency_response(&signal, |f| cascade_response(stages, f))
}

/// Passes one periodic block through the channel. Deterministic for a fixed
/// `model.seed`; extreme attenuation yields a noise-dominated block, not an error.
pub fn apply_channel(tx: &SampleBuffer, model: &ChannelModel) -> Result<SampleBuffer> {
    model.validate()?;
    let mut x = filter_stages(tx.clone(), &model.tx)?;

    if let Some(drive) = &model.eml {
        let optical: Vec<f64> = x.samples().iter().map(|&v| drive.power_for_drive(v)).collect();
        x = x.with_samples(optical)?;
    }

    let loss = model.budget.total_loss_db();
    if loss != 0.0 {
        let g = dbm_to_mw(-loss);
        x = x.with_samples(x.samples().iter().map(|v| v * g).collect())?;
    }

    x = filter_stages(x, &model.rx)?;

    if model.ac_coupled {
        let mean = x.mean();
        x = x.with_samples(x.samples().iter().map(|v| v - mean).collect())?;
    }
    if let Some(knee) = model.saturation_knee {
        x = pin_tia_saturation(&x, knee)?;
    }

    let std = match model.noise {
        Noise::None => 0.0,
        Noise::Thermal { std } => std,
        Noise::Snr { db } => {
            let mean = x.mean();
            let var = x.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / x.len() as f64;
            (var / 10f64.powf(db / 10.0)).sqrt()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    x = add_noise(x, std, &mut rng)?;
    x = filter_stages(x, &model.adc)?;
    rng.set_stream(1);
    add_noise(x, model.adc_noise_std, &mut rng)
}

fn add_noise(x: SampleBuffer, std: f64, rng: &mut ChaCha8Rng) -> Result<SampleBuffer> {
    if std == 0.0 {
        return Ok(x);
    }
    let noisy = x
        .samples()
        .iter()
        .map(|v| v + std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    x.with_samples(noisy)
}

/// `frequency_hz,magnitude_db` rows for a cascade, for plotting.
pub fn response_csv(stages: &[FrequencyResponse], max_hz: f64, points: usize) -> String {
    let mut out = String::from("frequency_hz,magnitude_db\n");
    for i in 0..points {
        let f = max_hz * i as f64 / (points - 1).max(1) as f64;
        let db = 20.0 * cascade_response(stages, f).norm().log10();
        out.push_str(&format!("{f:.6e},{db:.6}\n"));
    }
    out
}
