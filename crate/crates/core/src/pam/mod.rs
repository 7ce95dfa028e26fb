//! Nyquist PAM4 and partial-response PAM4 transmit and receive chains.

mod mapping;
mod rx;
mod tx;

pub use mapping::{pam4_demap, pam4_map, pr_decode_indices, pr_encode, seven_level_decision, PamMapping};
pub use rx::{pam_receive, Detector, PamReception, PamRxConfig};
pub use tx::{pam_transmit, pam_transmit_detailed, LevelAdjust, LevelAdjustment, PamTxConfig, PamWaveform};

use crate::error::Result;
use crate::sigproc::{debruijn_sequence, prbs31_bits};

/// Payload bits from the order-8 4-ary de Bruijn sequence (65536 symbols),
/// each symbol contributing its two bits.
pub fn debruijn_payload(order: usize) -> Result<Vec<u8>> {
    let s = debruijn_sequence(4, order)?;
    Ok(s.indices()
        .iter()
        .flat_map(|&v| [(v >> 1) as u8, (v & 1) as u8])
        .collect())
}

/// The de Bruijn payload XORed with PRBS31. The plain sequence is built from
/// concatenated Lyndon words and carries strong spectral lines at multiples
/// of `1/order` of the symbol rate; the scrambled payload is spectrally white.
pub fn scrambled_payload(order: usize) -> Result<Vec<u8>> {
    let bits = debruijn_payload(order)?;
    let prbs = prbs31_bits(bits.len());
    Ok(bits.iter().zip(prbs).map(|(a, b)| a ^ b).collect())
}
