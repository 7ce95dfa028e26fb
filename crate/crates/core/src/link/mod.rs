//! Parametric model of the transmission testbed: transmitter components,
//! modulator nonlinearity, fiber and attenuator, photoreceiver and noise.

mod channel;
mod eml;
mod presets;
mod response;

pub use channel::{apply_channel, pin_tia_saturation, response_csv, ChannelModel, LinkBudget, Noise};
pub use eml::{dbm_to_mw, eml_modulate, extinction_ratio_db, mw_to_dbm, EmlCurve, EmlDrive, Modulated};
pub use presets::{
    list_presets, nearest_preset, preset, PresetInfo, ADC_NOISE_STD, ADC_PASS_HZ, ADC_STOP_HZ, AWGN_PRESET_SNR_DB,
    DEFAULT_ROP_DBM, EML_SLOPE_V, PIN_TIA_KNEE, PRESET_NAMES, RECEIVER_NOISE_STD,
};
pub use response::{
    cascade_magnitude_db, cascade_response, stages_in, tx_component_model, FrequencyResponse,
    StageGroup, StageShape, TxComponentParams,
};
