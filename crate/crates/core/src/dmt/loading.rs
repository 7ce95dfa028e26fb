use serde::{Deserialize, Serialize};

use super::qam::MAX_BITS;
use crate::error::{invalid, Error, Result};

/// Per-carrier SNR in dB; entry `i` belongs to carrier `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrProfile {
    snr_db: Vec<f64>,
}

impl SnrProfile {
    pub fn new(snr_db: Vec<f64>) -> Result<Self> {
        if snr_db.is_empty() {
            return Err(invalid("snr_db", "empty profile"));
        }
        if let Some(i) = snr_db.iter().position(|v| !v.is_finite()) {
            return Err(invalid("snr_db", format!("carrier {} is not finite", i + 1)));
        }
        Ok(Self { snr_db })
    }

    pub fn snr_db(&self) -> &[f64] {
        &self.snr_db
    }

    pub fn linear(&self, i: usize) -> f64 {
        10f64.powf(self.snr_db[i] / 10.0)
    }

    pub fn len(&self) -> usize {
        self.snr_db.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snr_db.is_empty()
    }

    /// CSV with header `carrier,frequency_hz,snr_db`.
    pub fn to_csv(&self, carrier_spacing_hz: f64) -> String {
        let mut s = String::from("carrier,frequency_hz,snr_db\n");
        for (i, v) in self.snr_db.iter().enumerate() {
            s.push_str(&format!("{},{:.6e},{:.4}\n", i + 1, (i + 1) as f64 * carrier_spacing_hz, v));
        }
        s
    }
}

/// Bits and linear power per carrier; entry `i` belongs to carrier `i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingTable {
    bits: Vec<u8>,
    power: Vec<f64>,
}

impl LoadingTable {
    pub fn new(bits: Vec<u8>, power: Vec<f64>) -> Result<Self> {
        let t = Self { bits, power };
        t.validate()?;
        Ok(t)
    }

    /// Every one of the first `active` carriers at `bits` with unit power.
    pub fn uniform(carriers: usize, active: usize, bits: u8) -> Result<Self> {
        let b: Vec<u8> = (0..carriers).map(|i| if i < active { bits } else { 0 }).collect();
        let p = b.iter().map(|&v| if v > 0 { 1.0 } else { 0.0 }).collect();
        Self::new(b, p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bits.len() != self.power.len() {
            return Err(Error::LengthMismatch {
                expected: self.bits.len(),
                actual: self.power.len(),
            });
        }
        for (i, (&b, &p)) in self.bits.iter().zip(&self.power).enumerate() {
            if b > MAX_BITS {
                return Err(invalid("loading", format!("carrier {} carries {b} bits", i + 1)));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(invalid("loading", format!("carrier {} power {p}", i + 1)));
            }
            if b == 0 && p != 0.0 {
                return Err(invalid("loading", format!("carrier {} has power without bits", i + 1)));
            }
        }
        Ok(())
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn total_bits(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    /// CSV with header `carrier,bits,power_db`; unloaded carriers report `-inf`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("carrier,bits,power_db\n");
        for (i, (&b, &p)) in self.bits.iter().zip(&self.power).enumerate() {
            if p > 0.0 {
                s.push_str(&format!("{},{},{:.4}\n", i + 1, b, 10.0 * p.log10()));
            } else {
                s.push_str(&format!("{},{},-inf\n", i + 1, b));
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChowSettings {
    pub gap_db: f64,
    pub max_bits: u8,
    /// Carriers past this count stay unloaded.
    pub max_carriers: Option<usize>,
}

impl Default for ChowSettings {
    fn default() -> Self {
        Self {
            gap_db: 9.8,
            max_bits: MAX_BITS,
            max_carriers: None,
        }
    }
}

fn unrounded_bits(snr: f64, gap: f64, margin_db: f64) -> f64 {
    (1.0 + snr / (gap * 10f64.powf(margin_db / 10.0))).log2()
}

/// Margin-adaptive loading: bisect the margin until the rounded bit total
/// brackets `target`, then move single bits on the carriers closest to their
/// rounding boundary until the total is exact.
pub fn chow_bit_loading(snr: &SnrProfile, target: usize, settings: &ChowSettings) -> Result<LoadingTable> {
    let max_bits = settings.max_bits.min(MAX_BITS);
    let active = settings.max_carriers.unwrap_or(snr.len()).min(snr.len());
    let capacity = active * max_bits as usize;
    if target > capacity {
        return Err(Error::InfeasibleLoading { target, max: capacity });
    }
    let gap = 10f64.powf(settings.gap_db / 10.0);
    let lin: Vec<f64> = (0..active).map(|i| snr.linear(i)).collect();
    let round_at = |margin: f64| -> (Vec<f64>, Vec<u8>) {
        let raw: Vec<f64> = lin.iter().map(|&s| unrounded_bits(s, gap, margin)).collect();
        let b = raw.iter().map(|&r| r.round().clamp(0.0, max_bits as f64) as u8).collect();
        (raw, b)
    };
    let total = |b: &[u8]| b.iter().map(|&v| v as usize).sum::<usize>();

    // total is non-increasing in the margin
    let (mut lo, mut hi) = (-100.0f64, 100.0f64);
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        if total(&round_at(mid).1) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (raw, mut bits) = round_at(lo);
    let mut sum = total(&bits);

    if sum > target {
        // drop bits where rounding up was narrowest; weaker carriers first on ties
        let mut order: Vec<usize> = (0..active).filter(|&i| bits[i] > 0).collect();
        order.sort_by(|&a, &b| {
            let da = raw[a] - (bits[a] as f64 - 0.5);
            let db = raw[b] - (bits[b] as f64 - 0.5);
            da.total_cmp(&db).then(lin[a].total_cmp(&lin[b]))
        });
        for i in order {
            if sum == target {
                break;
            }
            bits[i] -= 1;
            sum -= 1;
        }
    }
    while sum < target {
        let mut order: Vec<usize> = (0..active).filter(|&i| bits[i] < max_bits).collect();
        order.sort_by(|&a, &b| {
            let da = (bits[a] as f64 + 0.5) - raw[a];
            let db = (bits[b] as f64 + 0.5) - raw[b];
            da.total_cmp(&db).then(lin[b].total_cmp(&lin[a]))
        });
        for i in order {
            if sum == target {
                break;
            }
            bits[i] += 1;
            sum += 1;
        }
    }

    bits.resize(snr.len(), 0);
    let power = bits.iter().map(|&b| if b > 0 { 1.0 } else { 0.0 }).collect();
    LoadingTable::new(bits, power)
}

/// Scale carrier powers to `(2^b − 1) / SNR`, equalizing the symbol-error
/// margin across constellations, then restore the original power total.
pub fn cioffi_power_loading(loading: &LoadingTable, snr: &SnrProfile) -> Result<LoadingTable> {
    if loading.len() != snr.len() {
        return Err(Error::LengthMismatch {
            expected: loading.len(),
            actual: snr.len(),
        });
    }
    let before: f64 = loading.power.iter().sum();
    let raw: Vec<f64> = loading
        .bits
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            if b == 0 {
                0.0
            } else {
                ((1u32 << b) - 1) as f64 / snr.linear(i)
            }
        })
        .collect();
    let after: f64 = raw.iter().sum();
    let power = if after > 0.0 {
        raw.iter().map(|p| p * before / after).collect()
    } else {
        raw
    };
    LoadingTable::new(loading.bits.clone(), power)
}
