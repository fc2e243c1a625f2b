use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point has no position block, which the composite metric requires")]
    MissingPosition,

    #[error("zero-norm vector has no angular distance")]
    ZeroNorm,

    #[error("non-finite coordinate in point")]
    NonFinite,

    #[error("timestamp {got} precedes the previous arrival at {last}")]
    TimeRegression { last: f64, got: f64 },

    #[error("frequency {f} is below f0 = {f0}; the density guarantees only hold for f >= f0")]
    FrequencyBelowMinimum { f: f64, f0: f64 },

    #[error("radius index {index} outside 0..={c}")]
    RadiusIndexOutOfRange { index: usize, c: usize },

    #[error("outputs are not sorted by decreasing frequency (position {0})")]
    UnsortedOutputs(usize),

    #[error("cannot merge output sets: {0}")]
    MergeMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),

    #[error("inconsistent schedule at event {index}: {reason}")]
    InconsistentSchedule { index: usize, reason: String },

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by malformed files or failed I/O rather than
    /// by a caller breaking an API contract.
    pub fn is_format_or_io(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Json(_) | Error::Io(_) | Error::Snapshot(_)
        )
    }

    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
