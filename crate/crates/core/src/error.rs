use thiserror::Error;

/// Errors raised by the signal chains, models and experiment layer.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("FFT size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("signal has zero power")]
    ZeroPower,

    #[error("sequence length {requested} exceeds the memory cap of {cap} symbols")]
    SequenceTooLong { requested: u128, cap: usize },

    #[error("synchronization failed: correlation peak {peak:.3} below threshold {threshold:.3}")]
    SyncFailed { peak: f64, threshold: f64 },

    #[error("bit alignment failed: correlation peak {peak:.3} below threshold {threshold:.3}")]
    AlignmentFailed { peak: f64, threshold: f64 },

    #[error("LMS diverged with step size {mu:e}")]
    Diverged { mu: f64 },

    #[error("equalizer did not converge: residual MSE {mse:.4} above limit {limit:.4}")]
    NotConverged { mse: f64, limit: f64 },

    #[error("Gardner detector found no lock point over the trial grid")]
    NoZeroCrossing,

    #[error("target of {target} bits is infeasible; at most {max} bits can be loaded")]
    InfeasibleLoading { target: usize, max: usize },

    #[error("found {found} distinct level clusters, expected {expected}")]
    TooFewClusters { found: usize, expected: usize },

    #[error("requested ROP {requested_dbm:.2} dBm exceeds the link maximum of {max_dbm:.2} dBm")]
    UnreachableRop { requested_dbm: f64, max_dbm: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
