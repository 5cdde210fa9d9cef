use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("label {label:?} listed with conflicting ids {first} and {second}")]
    DuplicateLabel { label: String, first: u32, second: u32 },
    #[error("dictionary ids are not dense: expected {expected}, found {found}")]
    SparseDictionary { expected: usize, found: usize },
    #[error("invalid id {id} for vocabulary of size {size}")]
    InvalidId { id: u32, size: usize },
    #[error("splits {0} and {1} share {2} triple(s)")]
    SplitOverlap(&'static str, &'static str, usize),

    #[error("{path}: malformed line {line}")]
    MalformedLine { path: PathBuf, line: usize },
    #[error("bad checkpoint magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("checkpoint length mismatch: header implies {expected} bytes, file has {actual}")]
    LengthMismatch { expected: u64, actual: u64 },
    #[error("non-finite value in tensor {tensor} at index {index}")]
    NonFiniteValue { tensor: usize, index: usize },
    #[error("invalid checkpoint header: {0}")]
    BadHeader(String),
    #[error("report has no ranks")]
    EmptyReport,
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("relation {0} is not declared in the schema")]
    UndeclaredRelation(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),

    #[error("no relation passes the refinement filter")]
    EmptyResult,
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("invalid sampler config: {0}")]
    InvalidSamplerConfig(String),

    #[error("unknown model tag {0:?}")]
    UnknownModel(String),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("no preset for model {model} on dataset {dataset}")]
    UnknownPreset { model: String, dataset: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("negative count must be at least 1")]
    InvalidK,
    #[error("no corruption candidate exists for triple ({0}, {1}, {2})")]
    ExhaustedCandidates(u32, u32, u32),
    #[error("non-finite gradient for tensor {tensor} row {row}")]
    NonFiniteGradient { tensor: usize, row: usize },

    #[error("test split is empty")]
    EmptyTestSet,
    #[error("entity {id} has no trained row (model has {rows} entities)")]
    UnseenEntity { id: u32, rows: usize },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
