//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed line: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unmappable label token '{token}' at line {line}")]
    UnmappableLabel { token: String, line: usize },

    #[error("unmappable label token '{token}'")]
    UnmappableToken { token: String },

    #[error("duplicate sample id '{id}'")]
    DuplicateSampleId { id: String },

    #[error("unknown sample id '{id}'")]
    UnknownSampleId { id: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("nothing to export")]
    NothingToExport,

    #[error("template file is empty: {path}")]
    EmptyTemplateFile { path: PathBuf },

    #[error("blank template at line {line}")]
    BlankTemplate { line: usize },

    #[error("template id {id} out of range (bank size {size})")]
    TemplateOutOfRange { id: usize, size: usize },

    #[error("sample size {n} exceeds dataset size {size}")]
    SampleTooLarge { n: usize, size: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("gold/pred length mismatch: {gold} vs {pred}")]
    LengthMismatch { gold: usize, pred: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("model '{model}' is missing a prediction for sample '{id}'")]
    MissingPrediction { model: String, id: String },

    #[error("replay file has no entry for sample id '{id}'")]
    MissingReplayId { id: String },

    #[error("backend error: {0}")]
    Backend(String),

    #[error("backend failures exceeded threshold: {failed}/{total} samples failed (threshold {threshold})")]
    AbortThreshold {
        failed: usize,
        total: usize,
        threshold: f64,
    },

    #[error("invalid JSON in {path}: {message}")]
    Json { path: PathBuf, message: String },
}

impl Error {
    /// Process exit code category: 1 usage, 2 data, 3 backend.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AbortThreshold { .. } | Error::Backend(_) => 3,
            Error::InvalidConfig(_) => 2,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
