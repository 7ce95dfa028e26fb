use super::SymbolSequence;
use crate::error::{invalid, Error, Result};

/// Longest sequence `debruijn_sequence` will build.
pub const MAX_SEQUENCE_LEN: usize = 1 << 24;

/// De Bruijn sequence B(k, n): every length-`order` word over `alphabet_size`
/// symbols appears exactly once when the sequence is read cyclically.
///
/// Built by concatenating Lyndon words in lexicographic order (FKM). The
/// alphabet is `0, 1, …, k-1`.
pub fn debruijn_sequence(alphabet_size: usize, order: usize) -> Result<SymbolSequence> {
    debruijn_sequence_capped(alphabet_size, order, MAX_SEQUENCE_LEN)
}

pub fn debruijn_sequence_capped(
    alphabet_size: usize,
    order: usize,
    cap: usize,
) -> Result<SymbolSequence> {
    if alphabet_size < 2 {
        return Err(invalid("alphabet_size", "need at least two symbols"));
    }
    if order < 1 {
        return Err(invalid("order", "order must be >= 1"));
    }
    let requested = (alphabet_size as u128).checked_pow(order as u32);
    match requested {
        Some(len) if len <= cap as u128 => {}
        other => {
            return Err(Error::SequenceTooLong {
                requested: other.unwrap_or(u128::MAX),
                cap,
            })
        }
    }

    let k = alphabet_size as i64;
    let mut out = Vec::with_capacity(alphabet_size.pow(order as u32));
    // Duval's Lyndon word generator; words whose length divides the order are emitted
    let mut word: Vec<i64> = vec![-1];
    while let Some(last) = word.last_mut() {
        *last += 1;
        let m = word.len();
        if order % m == 0 {
            out.extend(word.iter().map(|&v| v as usize));
        }
        while word.len() < order {
            word.push(word[word.len() - m]);
        }
        while word.last() == Some(&(k - 1)) {
            word.pop();
        }
    }
    let alphabet = (0..alphabet_size).map(|v| v as f64).collect();
    SymbolSequence::new(out, alphabet)
}

/// The PRBS31 stream `x^31 + x^28 + 1` from the all-ones state, as used by
/// line-coding scramblers.
pub fn prbs31_bits(len: usize) -> Vec<u8> {
    let mut state: u32 = 0x7fff_ffff;
    (0..len)
        .map(|_| {
            let bit = ((state >> 30) ^ (state >> 27)) & 1;
            state = ((state << 1) | bit) & 0x7fff_ffff;
            bit as u8
        })
        .collect()
}
