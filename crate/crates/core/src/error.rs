use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: input file is empty")]
    EmptyInput { path: PathBuf },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}:{line}: missing field `{field}`")]
    MissingField {
        path: PathBuf,
        line: usize,
        field: String,
    },

    #[error("corpus contains no tokens; vocabulary would be empty")]
    EmptyVocabulary,

    #[error("token `{0}` is not in the vocabulary")]
    OutOfVocabulary(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty point set")]
    EmptyPointSet,

    #[error("unknown document id {0}")]
    UnknownDocId(usize),

    #[error("budget {budget} out of range for {n} samples")]
    BudgetOutOfRange { budget: usize, n: usize },

    #[error("pruning rate {rate} leaves an empty coreset for {n} samples")]
    EmptyBudget { rate: f64, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("need at least 2 documents for a projection, got {0}")]
    TooFewDocuments(usize),

    #[error("{path}: {reason}")]
    ScoresFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for this error class: 1 for usage/config errors,
    /// 2 for data errors, 3 for everything internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::EmptyInput { .. }
            | Error::MalformedRecord { .. }
            | Error::MissingField { .. }
            | Error::EmptyVocabulary
            | Error::EmptyBudget { .. }
            | Error::TooFewDocuments(_)
            | Error::ScoresFile { .. }
            | Error::Io(_) => 2,
            Error::OutOfVocabulary(_)
            | Error::DimensionMismatch { .. }
            | Error::EmptyPointSet
            | Error::UnknownDocId(_)
            | Error::BudgetOutOfRange { .. } => 3,
        }
    }
}

/// Pipeline stage names used to tag errors surfaced by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Vectorize,
    Median,
    Score,
    Prune,
    Project,
    Write,
    Stats,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Vectorize => "vectorize",
            Stage::Median => "median",
            Stage::Score => "score",
            Stage::Prune => "prune",
            Stage::Project => "project",
            Stage::Write => "write",
            Stage::Stats => "stats",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

pub trait StageContext<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}
