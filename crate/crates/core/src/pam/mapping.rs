use serde::{Deserialize, Serialize};

use crate::adaptive::nearest_level;
use crate::error::{invalid, Result};
use crate::sigproc::SymbolSequence;

/// Bit-pair to level assignment for PAM4.
///
/// `level_of_pair[2·b0 + b1]` is the level index carrying the pair `b0 b1`
/// (first bit most significant).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PamMapping {
    pub level_of_pair: [usize; 4],
    pub levels: [f64; 4],
}

impl Default for PamMapping {
    /// 00 → −3, 01 → −1, 11 → +1, 10 → +3.
    fn default() -> Self {
        Self {
            level_of_pair: [0, 1, 3, 2],
            levels: [-3.0, -1.0, 1.0, 3.0],
        }
    }
}

impl PamMapping {
    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; 4];
        for &l in &self.level_of_pair {
            if l > 3 || seen[l] {
                return Err(invalid("mapping", "bit pairs must map one-to-one onto 4 levels"));
            }
            seen[l] = true;
        }
        if self.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("mapping", "levels must be strictly increasing"));
        }
        let pairs = self.pair_of_level();
        if pairs.windows(2).any(|w| (w[0] ^ w[1]).count_ones() != 1) {
            return Err(invalid("mapping", "adjacent levels must differ in exactly one bit"));
        }
        Ok(())
    }

    /// Inverse table: bit pair carried by each level index.
    pub fn pair_of_level(&self) -> [usize; 4] {
        let mut inv = [0; 4];
        for (pair, &l) in self.level_of_pair.iter().enumerate() {
            inv[l % 4] = pair;
        }
        inv
    }
}

/// One symbol per bit pair. Bits are 0/1 values.
pub fn pam4_map(bits: &[u8], mapping: &PamMapping) -> Result<SymbolSequence> {
    mapping.validate()?;
    if bits.len() % 2 != 0 {
        return Err(invalid("bits", format!("odd bit count {}", bits.len())));
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(invalid("bits", "values must be 0 or 1"));
    }
    let indices = bits
        .chunks_exact(2)
        .map(|p| mapping.level_of_pair[(2 * p[0] + p[1]) as usize])
        .collect();
    SymbolSequence::new(indices, mapping.levels.to_vec())
}

/// Inverse of [`pam4_map`] on level indices.
pub fn pam4_demap(indices: &[usize], mapping: &PamMapping) -> Vec<u8> {
    let pairs = mapping.pair_of_level();
    indices
        .iter()
        .flat_map(|&i| {
            let p = pairs[i];
            [(p >> 1) as u8, (p & 1) as u8]
        })
        .collect()
}

/// Delay-and-add encoding `y_k = x_k + x_{k−1}` with `x_{−1}` at the lowest level.
///
/// The input alphabet must be four equidistant levels; the output carries the
/// seven distinct sums, so index arithmetic is `i_k + i_{k−1}`.
pub fn pr_encode(symbols: &SymbolSequence) -> Result<SymbolSequence> {
    let a = symbols.alphabet();
    if a.len() != 4 {
        return Err(invalid(
            "symbols",
            format!("partial response needs a 4-level alphabet, got {}", a.len()),
        ));
    }
    let step = a[1] - a[0];
    if a.windows(2).any(|w| ((w[1] - w[0]) - step).abs() > 1e-9 * step.abs()) {
        return Err(invalid("symbols", "partial response needs equidistant levels"));
    }
    let alphabet: Vec<f64> = (0..7).map(|k| 2.0 * a[0] + k as f64 * step).collect();
    let mut prev = 0;
    let indices = symbols
        .indices()
        .iter()
        .map(|&i| {
            let v = i + prev;
            prev = i;
            v
        })
        .collect();
    SymbolSequence::new(indices, alphabet)
}

/// Symbol-by-symbol inversion of [`pr_encode`] from seven-level indices.
/// A wrong decision propagates until the next saturating level.
pub fn pr_decode_indices(line: &[usize]) -> Vec<usize> {
    let mut prev = 0usize;
    line.iter()
        .map(|&v| {
            let x = (v as i64 - prev as i64).clamp(0, 3) as usize;
            prev = x;
            x
        })
        .collect()
}

/// Nearest of seven sorted levels; a sample exactly between two goes to the lower.
pub fn seven_level_decision(sample: f64, alphabet: &[f64]) -> usize {
    nearest_level(sample, alphabet)
}
