//! BER counting, sweep orchestration, latency budget and optical level metrics.

mod ber;
mod latency;
mod levels;
mod sweep;

pub use ber::{
    align_bits, count_ber, count_ber_aligned, wilson_interval, BerReport, CI_BCH_THRESHOLD, KP4_THRESHOLD, MIN_ERRORS,
    Z_95,
};
pub use latency::{latency_budget, ChainSpec, LatencyBudget, LatencyModel, StageLatency};
pub use levels::{measure_extinction_and_oma, OpticalLevels};
pub use sweep::{mix_seed, point_seed, run_sweep, SweepPoint};
