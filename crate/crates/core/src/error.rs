use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("malformed JSON: {0}")]
    Json(String),

    #[error("row {row} ({id}), column {column}: cell value {value:?} is not 0 or 1")]
    InvalidCell {
        row: usize,
        id: String,
        column: String,
        value: String,
    },

    #[error("row {row}: duplicate respondent id {id:?}")]
    DuplicateId { id: String, row: usize },

    #[error("duplicate answer code {0:?}")]
    DuplicateCode(String),

    #[error("answer code {0:?} is not in the schema")]
    UnknownCode(String),

    #[error("schema code {0:?} has no column in the matrix")]
    MissingColumn(String),

    #[error("invalid question metadata for {code:?}: {message}")]
    InvalidQuestion { code: String, message: String },

    #[error("matrix has no rows or no columns")]
    EmptyMatrix,

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("invalid mixture spec: {0}")]
    InvalidSpec(String),

    #[error("respondent {respondent:?}: option index {index} out of range for {options} options")]
    OptionOutOfRange {
        respondent: String,
        index: usize,
        options: usize,
    },

    #[error("respondent {respondent:?}: expected exactly one selection, found {count}")]
    SelectionCount { respondent: String, count: usize },

    #[error("a rule needs two distinct answers, got {0:?} twice")]
    SameCode(String),

    #[error("conditioning answer {code:?} has an empty {stratum} stratum")]
    EmptyStratum { code: String, stratum: &'static str },

    #[error("proportion test undefined for baseline {0}")]
    UndefinedTest(f64),

    #[error("conversion rate undefined for p(A)={p_a}, p(A|B)={p_a_given_b}")]
    UndefinedConversion { p_a: f64, p_a_given_b: f64 },

    #[error("proportion {0} outside [0, 1]")]
    InvalidProportion(f64),

    #[error("significance level {0} outside (0, 1)")]
    InvalidAlpha(f64),

    #[error("cannot form {k} clusters from {items} items")]
    TooManyClusters { k: usize, items: usize },

    #[error("invalid clustering configuration: {0}")]
    InvalidClusterConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("validity metric needs at least two clusters")]
    SingleCluster,

    #[error("validity metric undefined: every point is its own cluster")]
    AllSingletons,

    #[error("clusters {0} and {1} have coincident centroids")]
    CoincidentCentroids(usize, usize),

    #[error("override code {code:?} is not a member of cluster {cluster}")]
    OverrideNotInCluster { cluster: usize, code: String },

    #[error("respondent {0:?} has no score")]
    MissingScore(String),

    #[error("score table references unknown respondent {0:?}")]
    UnknownRespondent(String),

    #[error("invalid score for {id:?}: {value:?}")]
    InvalidScore { id: String, value: String },

    #[error("quantile {0} outside (0, 1]")]
    InvalidQuantile(f64),

    #[error("segment mask selects no respondents")]
    EmptyMask,

    #[error("no category values present")]
    NoCategories,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line()).unwrap_or(0);
        Error::Csv {
            line,
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}
