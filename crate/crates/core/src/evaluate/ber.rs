use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};

/// RS(544,514) pre-FEC limit.
pub const KP4_THRESHOLD: f64 = 2e-4;
/// CI-BCH(1020,988) pre-FEC limit.
pub const CI_BCH_THRESHOLD: f64 = 4.4e-3;
/// Errors needed before a BER counts as measured rather than bounded.
pub const MIN_ERRORS: u64 = 100;
/// Normal quantile of the two-sided 95% interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `errors` out of `total`.
pub fn wilson_interval(errors: u64, total: u64, z: f64) -> (f64, f64) {
    if total == 0 {
        return (0.0, 1.0);
    }
    let n = total as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let center = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BerReport {
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    /// Verdict per named FEC limit: `ber < limit`.
    pub thresholds: BTreeMap<String, bool>,
    /// 95% Wilson interval.
    pub confidence: (f64, f64),
}

impl BerReport {
    pub fn from_counts(bit_errors: u64, bits_total: u64) -> Self {
        let ber = if bits_total == 0 {
            0.0
        } else {
            bit_errors as f64 / bits_total as f64
        };
        let thresholds = [("kp4", KP4_THRESHOLD), ("ci_bch", CI_BCH_THRESHOLD)]
            .into_iter()
            .map(|(k, t)| (k.to_string(), ber < t))
            .collect();
        Self {
            bit_errors,
            bits_total,
            ber,
            thresholds,
            confidence: wilson_interval(bit_errors, bits_total, Z_95),
        }
    }

    /// Sum of two independent counts.
    pub fn merge(&self, other: &BerReport) -> Self {
        Self::from_counts(self.bit_errors + other.bit_errors, self.bits_total + other.bits_total)
    }

    pub fn is_measured(&self) -> bool {
        self.bit_errors >= MIN_ERRORS
    }

    pub fn passes(&self, threshold: &str) -> Option<bool> {
        self.thresholds.get(threshold).copied()
    }
}

/// Counts bit differences between equal-length streams.
pub fn count_ber(tx: &[u8], rx: &[u8]) -> Result<BerReport> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    let errors = tx.iter().zip(rx).filter(|(a, b)| a != b).count();
    Ok(BerReport::from_counts(errors as u64, tx.len() as u64))
}

/// Cyclic shift `s` maximizing agreement of `rx[k + s]` with `tx[k]`, found by
/// correlating the antipodal streams. Fails when the normalized peak stays
/// below `threshold`.
pub fn align_bits(tx: &[u8], rx: &[u8], threshold: f64) -> Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::LengthMismatch {
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    let a: Vec<f64> = rx.iter().map(|&b| if b == 0 { -1.0 } else { 1.0 }).collect();
    let b: Vec<f64> = tx.iter().map(|&b| if b == 0 { -1.0 } else { 1.0 }).collect();
    let r = crate::sigproc::fft::circular_xcorr(&a, &b);
    let lag = (0..r.len()).max_by(|&x, &y| r[x].total_cmp(&r[y])).unwrap_or(0);
    let peak = r.get(lag).copied().unwrap_or(0.0) / tx.len().max(1) as f64;
    if peak < threshold {
        return Err(Error::AlignmentFailed { peak, threshold });
    }
    Ok(lag)
}

/// [`count_ber`] after cyclic alignment by [`align_bits`].
pub fn count_ber_aligned(tx: &[u8], rx: &[u8], threshold: f64) -> Result<BerReport> {
    let lag = align_bits(tx, rx, threshold)?;
    let n = rx.len();
    let shifted: Vec<u8> = (0..n).map(|k| rx[(k + lag) % n]).collect();
    count_ber(tx, &shifted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_streams() {
        let r = count_ber(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap();
        assert_eq!(r.ber, 0.0);
        assert_eq!(r.passes("kp4"), Some(true));
        assert_eq!(r.passes("ci_bch"), Some(true));
    }

    #[test]
    fn one_flip_in_a_million() {
        let tx = vec![0u8; 1_000_000];
        let mut rx = tx.clone();
        rx[12345] = 1;
        assert_eq!(count_ber(&tx, &rx).unwrap().ber, 1e-6);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(100, 100_000, Z_95);
        assert!(lo < 1e-3 && hi > 1e-3);
        assert_eq!(wilson_interval(0, 10, Z_95).0, 0.0);
    }

    #[test]
    fn merge_adds_counts() {
        let a = BerReport::from_counts(3, 100);
        let b = BerReport::from_counts(7, 900);
        let m = a.merge(&b);
        assert_eq!((m.bit_errors, m.bits_total), (10, 1000));
        assert!(!m.passes("ci_bch").unwrap());
    }
}
