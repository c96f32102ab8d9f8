use std::path::PathBuf;

use thiserror::Error;

use crate::store::TupleRef;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid schema: {0}")]
    SchemaInvalid(String),

    #[error("ingest failed for table `{table}`: {reason}")]
    Ingest { table: String, reason: String },

    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios((f64, f64, f64)),

    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },

    #[error("segment offsets are not a monotone cover of {rows} rows")]
    BadOffsets { rows: usize },

    #[error("loss must be a 1x1 value, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("non-finite gradient in parameter `{name}`")]
    NonFiniteGradient { name: String },

    #[error("non-finite gradient at training step {step}: parameter `{name}`")]
    TrainingDiverged { step: usize, name: String },

    #[error("cycle detected in DAG")]
    CycleDetected,

    #[error("before/after DAG lists are not aligned: {0}")]
    MismatchedLists(String),

    #[error("no embedding for key {tuple:?} at depth {depth}")]
    UnknownEmbeddingKey { tuple: TupleRef, depth: u32 },

    #[error("standard deviation of training targets is zero")]
    ZeroStd,

    #[error("AUROC needs both classes present")]
    SingleClass,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("checkpoint does not match dataset: {0}")]
    SchemaMismatch(String),

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

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            op,
            detail: detail.into(),
        }
    }
}
