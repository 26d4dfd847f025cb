use std::path::PathBuf;

use serde_json::json;
use swb_core::annotation::AnnotationError;
use swb_core::corpus::{CorpusError, StoreError};
use swb_core::estimator::EstimatorError;
use swb_core::index::IndexError;
use swb_core::sem::SemError;

/// Failure of one subcommand. Each module maps to its own exit status so
/// scripts can tell stages apart without parsing messages.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error("{dimension}: {source}")]
    Estimator {
        dimension: String,
        source: EstimatorError,
    },
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("{0}")]
    Report(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Corpus(_) | CliError::Store(_) => "corpus",
            CliError::Annotation(_) => "annotation",
            CliError::Estimator { .. } => "estimator",
            CliError::Index(_) => "index",
            CliError::Sem(_) => "sem",
            CliError::Report(_) => "report",
        }
    }

    pub fn exit_status(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Corpus(_) | CliError::Store(_) => 10,
            CliError::Annotation(_) => 11,
            CliError::Estimator { .. } => 12,
            CliError::Index(_) => 13,
            CliError::Sem(_) => 14,
            CliError::Report(_) => 15,
        }
    }

    /// The one-line machine-readable form written to stderr.
    pub fn to_json_line(&self) -> String {
        json!({ "error": self.code(), "message": self.to_string() }).to_string()
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
