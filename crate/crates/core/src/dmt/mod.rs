//! Discrete multitone modem with bit and power loading.

mod config;
mod loading;
mod modem;
pub mod qam;

pub use config::{fft_butterflies, rate_to_bits, DmtConfig, REFERENCE_USED_CARRIERS};
pub use loading::{chow_bit_loading, cioffi_power_loading, ChowSettings, LoadingTable, SnrProfile};
pub use modem::{
    dmt_demodulate, dmt_modulate, estimate_snr, frame_bits, hermitian_ifft, snr_probe_bits, snr_probe_loading,
    snr_probe_waveform, synchronize, DmtReception, FrameSync,
};
