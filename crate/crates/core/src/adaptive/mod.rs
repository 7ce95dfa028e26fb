//! Adaptive blocks of the single-carrier chains: LMS equalizer, Viterbi
//! detector, pre-emphasis trainer and clock recovery.

mod ffe;
mod gardner;
mod mlse;
mod preemphasis;

pub use ffe::{lms_train, lms_train_ffe, nearest_level, FfeTaps, LmsEqualizer, LmsOutcome, LmsSchedule};
pub use gardner::{gardner_recover, gardner_s_curve, max_eye_phase, recover_clock, ClockPhase, TRIAL_GRID};
pub use mlse::{mlse_detect, MlseConfig, MAX_MEMORY};
pub use preemphasis::{boost_db, observe_through, train_preemphasis, PreemphasisSettings};
