use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no documents to fit")]
    NoDocuments,
    #[error("no vectors to average")]
    NoVectors,
    #[error("centroid set is empty")]
    NoCentroids,
    #[error("centroid `{0}` has zero norm")]
    ZeroCentroid(String),
    #[error("labels are degenerate: {0}")]
    DegenerateLabels(String),
    #[error("model has not been fitted")]
    ModelNotFitted,
    #[error("profile location of `{0}` could not be resolved")]
    NoProfileLocation(String),
    #[error("account `{0}` has no tweets")]
    EmptyAccount(String),
    #[error("insufficient data: need at least {needed} examples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("no feature groups selected")]
    NoFeatures,
    #[error("bad gazetteer line {line}: {reason}")]
    BadGazetteer { line: usize, reason: String },
    #[error("bad taxonomy `{name}` line {line}: {reason}")]
    BadTaxonomy {
        name: String,
        line: usize,
        reason: String,
    },
    #[error("bad record at line {line}: {reason}")]
    BadRecord { line: usize, reason: String },
    #[error("unsupported format: {0}")]
    Format(String),
    #[error("schema mismatch: model expects `{expected}`, input has `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("missing input file {}", .0.display())]
    MissingInput(PathBuf),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingInput(_) => 2,
            Error::DegenerateLabels(_) => 3,
            Error::SchemaMismatch { .. } => 4,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
