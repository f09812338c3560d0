use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: empty file")]
    EmptyFile { path: PathBuf },

    #[error("{path}:{line}: malformed row: {reason}")]
    MalformedRow { path: PathBuf, line: u64, reason: String },

    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("duplicate id {id:?}")]
    DuplicateId { id: String },

    #[error("unknown id {id:?}")]
    UnknownId { id: String },

    #[error("no labels given")]
    EmptyLabelSet,

    #[error("every exemplar carries the single label {label:?}; at least two classes are required")]
    SingleClass { label: String },

    #[error("annotation template has no label for id {id:?}")]
    UnfilledTemplate { id: String },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("posterior row for {id:?} sums to {sum}, expected 1")]
    PosteriorNotNormalized { id: String, sum: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("pearson similarity undefined for a constant vector{}", id_suffix(.id))]
    ZeroVarianceVector { id: Option<String> },

    #[error("cosine similarity undefined for an all-zero vector{}", id_suffix(.id))]
    ZeroNormVector { id: Option<String> },

    #[error("similarity entry ({i}, {j}) = {value} violates symmetry, range or unit diagonal")]
    InvalidSimilarity { i: usize, j: usize, value: f64 },

    #[error("{0} state does not track this objective")]
    ObjectiveMismatch(&'static str),

    #[error("index {index} out of range for a pool of {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("item {index} is already selected")]
    AlreadySelected { index: usize },

    #[error("matrix not positive definite (pivot {pivot:e}); increase epsilon")]
    NotPositiveDefinite { pivot: f64 },

    #[error("budget must be at least 1")]
    BudgetZero,

    #[error("budget {budget} exceeds pool size {n}")]
    BudgetExceedsPool { budget: usize, n: usize },

    #[error("log-determinant objective requires epsilon > 0, got {0}")]
    InvalidEpsilon(f64),

    #[error("exemplar set is empty")]
    EmptyExemplarSet,

    #[error("no feature row for exemplar {id:?}")]
    MissingFeatureRow { id: String },

    #[error("score {score} outside the open unit interval")]
    NonFiniteDensity { score: f64 },

    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: log-likelihood {value}")]
    DivergedTraining { epoch: usize, value: f64 },

    #[error("no ground-truth label for id {id:?}")]
    MissingGroundTruth { id: String },

    #[error("similarity cache {path}: {reason}")]
    BadCache { path: PathBuf, reason: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
}

fn id_suffix(id: &Option<String>) -> String {
    match id {
        Some(id) => format!(" (id {id:?})"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit code: 2 for bad input or violated preconditions, 1 for
    /// runtime and numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotPositiveDefinite { .. }
            | Error::NonFiniteDensity { .. }
            | Error::DivergedTraining { .. }
            | Error::Io { .. }
            | Error::Json { .. } => 1,
            Error::Csv { source, .. } if source.is_io_error() => 1,
            _ => 2,
        }
    }

    /// Attach an instance id to a vector-level similarity error.
    pub(crate) fn with_id(self, id: &str) -> Error {
        match self {
            Error::ZeroVarianceVector { id: None } => Error::ZeroVarianceVector {
                id: Some(id.to_string()),
            },
            Error::ZeroNormVector { id: None } => Error::ZeroNormVector {
                id: Some(id.to_string()),
            },
            other => other,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Error {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Error {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn csv(context: impl Into<String>, source: csv::Error) -> Error {
        Error::Csv {
            context: context.into(),
            source,
        }
    }
}
