//! Config-driven experiments: parsing, grid execution and CSV artifacts.

mod config;
mod run;

pub use config::{
    ChannelOverrides, ChannelSection, ConfigError, DmtSection, ExperimentConfig, Format, PamSection, SweepAxis,
    SweepSection, SWEEP_KEYS,
};
pub use run::{
    apply_sweep_value, ber_vs_rop_csv, chain_latency, dmt_loading, grid, optical_output, pam_extinction_db,
    pam_preemphasis, point_config, resolve_channel, run_experiment, run_point, sweep_grid_csv, taps_csv,
    write_artifacts, ExperimentResult, PointOutcome, PointParams, BER_COLUMNS, DAC_RATE,
};
