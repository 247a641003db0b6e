use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    CsvRead {
        path: PathBuf,
        #[source]
        source: Box<csv::Error>,
    },

    #[error("bad header in {path}: expected `from,to,amount,timestamp`, found `{found}`")]
    BadHeader { path: PathBuf, found: String },

    #[error("line {line}: expected 4 fields, found {found}")]
    FieldCount { line: u64, found: usize },

    #[error("line {line}: amount `{value}` is not a finite number")]
    NonNumericAmount { line: u64, value: String },

    #[error("line {line}: timestamp `{value}` is not a non-negative integer")]
    NonNumericTimestamp { line: u64, value: String },

    #[error("line {line}: negative amount")]
    NegativeAmount { line: u64 },

    #[error("cannot build a graph from zero records")]
    EmptyGraph,

    #[error("node index {index} out of range (graph has {node_count} nodes)")]
    InvalidNode { index: u32, node_count: usize },

    #[error("unknown address `{0}`")]
    UnknownAddress(String),

    #[error("snapshot version {found} not supported (expected {expected})")]
    SnapshotVersion { expected: u32, found: u32 },

    #[error("malformed snapshot: {0}")]
    SnapshotFormat(String),

    #[error("corpus line {line}: {msg}")]
    CorpusFormat { line: u64, msg: String },

    #[error("corpus was generated from a different graph (fingerprint {found:#018x}, expected {expected:#018x})")]
    GraphMismatch { expected: u64, found: u64 },

    #[error("corpus contains no walks")]
    EmptyCorpus,

    #[error("embedding file line {line}: {msg}")]
    EmbeddingFormat { line: u64, msg: String },

    #[error("embedding file declares {expected} rows but contains {found}")]
    RowCountMismatch { expected: usize, found: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training data contains a single class; both classes are required")]
    SingleClassTraining,

    #[error("need {needed} unlabeled nodes but only {available} are available")]
    InsufficientUnlabeled { needed: usize, available: usize },

    #[error("prediction/truth id sets do not match: {0}")]
    IdMismatch(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
