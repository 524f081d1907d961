use std::path::PathBuf;

use thiserror::Error;

use crate::example::Task;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature `{name}` has a non-finite value")]
    NonFiniteFeature { name: String },
    #[error("invalid feature name `{0}`")]
    InvalidFeatureName(String),
    #[error("example has no features")]
    EmptyExample,
    #[error("example weight must be finite and > 0, got {0}")]
    InvalidWeight(f64),
    #[error("regression target must be finite")]
    NonFiniteTarget,

    #[error("data source yielded no examples")]
    EmptySource,
    #[error("data source mixes categorical and real outputs")]
    MixedOutputTypes,
    #[error("dataset contains no labelled examples")]
    NoLabelledExamples,

    #[error("example shares no features with the model")]
    NoFeatureOverlap,
    #[error("output type mismatch: expected {expected}, found {found}")]
    OutputTypeMismatch { expected: Task, found: Task },
    #[error("task mismatch: expected {expected}, found {found}")]
    TaskMismatch { expected: Task, found: Task },
    #[error("score map is empty")]
    EmptyScores,

    #[error("parse error at line {line}, column {column}: {message}")]
    ParseError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown provenance tag `{0}`")]
    UnknownTag(String),
    #[error("malformed document: {0}")]
    Schema(String),

    #[error("column `{column}`: cannot parse `{value}` as a finite number")]
    UnparseableNumeric { column: String, value: String },
    #[error("row has no response column `{0}`")]
    MissingResponse(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("csv header is missing columns {missing:?}")]
    HeaderMismatch { missing: Vec<String> },
    #[error("csv parse error at line {line}: {message}")]
    CsvParseError { line: u64, message: String },
    #[error("invalid columnar schema: {0}")]
    InvalidSchema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("gradient contains a non-finite value")]
    NonFiniteGradient,
    #[error("training requires labelled examples")]
    UnlabelledExample,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("impurity of an empty node is undefined")]
    EmptyNode,

    #[error("every boosting round was rejected")]
    AllMembersRejected,
    #[error("member predictions disagree on the task type")]
    InconsistentTask,

    #[error("model file format error: {0}")]
    FormatError(String),
    #[error("unknown model class `{0}`")]
    UnknownModelClass(String),

    #[error("no registered class `{0}`")]
    UnknownClass(String),
    #[error("missing property `{0}`")]
    MissingProperty(String),
    #[error("resource `{path}` changed: recorded sha256 {expected}, found {actual}")]
    ResourceChanged {
        path: String,
        expected: String,
        actual: String,
    },
    #[error("reproduction mismatch: expected provenance hash {expected}, got {actual}")]
    ReproductionMismatch { expected: String, actual: String },
}

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    TaskMismatch,
    Reproduction,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            OutputTypeMismatch { .. } | TaskMismatch { .. } => ErrorClass::TaskMismatch,
            ReproductionMismatch { .. } | ResourceChanged { .. } => ErrorClass::Reproduction,
            UnknownClass(_) | MissingProperty(_) | InvalidConfig(_) | UnknownTag(_) | Schema(_)
            | InvalidSchema(_) => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}
