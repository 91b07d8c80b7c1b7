use thiserror::Error;

/// Errors raised by the emulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("snapshot has {count} taps, at most {max} are allowed")]
    TooManyTaps { count: usize, max: usize },

    #[error("invalid tap: {0}")]
    InvalidTap(String),

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("{name} must be positive, got {value}")]
    NonPositiveInput { name: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tap delay {delay} s exceeds the representable span of {max} s")]
    DelayOutOfRange { delay: f64, max: f64 },

    #[error("snapshot sequence is empty")]
    EmptySequence,

    #[error("first snapshot at {first} s is later than the signal start at {start} s")]
    UncoveredSignalStart { first: f64, start: f64 },

    #[error("timestamps must be strictly increasing (index {index})")]
    NonIncreasingTimestamps { index: usize },

    #[error("sub-band usable intervals overlap with conflicting values near {frequency} Hz")]
    OverlapConflict { frequency: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("usable band holds {points} grid points, at least {required} are needed")]
    BandTooNarrow { points: usize, required: usize },

    #[error("mean magnitude of the response is zero")]
    ZeroResponse,

    #[error("impulse response has no distinct peak")]
    DegenerateCir,

    #[error("response contains gaps and no fill policy was selected")]
    GappedInput,

    #[error("snapshots are not uniformly spaced in time (index {index})")]
    NonUniformSampling { index: usize },

    #[error("parse error at {locus}: {message}")]
    Parse { locus: String, message: String },

    #[error("invariant violation at {locus}: {message}")]
    InvariantViolation { locus: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
