use std::path::PathBuf;

use thiserror::Error;

/// A parameter or configuration value violating its invariants.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid {field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Fitting a statistical model failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("labeling requires exactly 4 clusters, model has {0}")]
    NotFourClusters(usize),
    #[error("quantile count {q} invalid for {n} samples")]
    BadQuantileCount { q: usize, n: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("missing required file {}", .0.display())]
    MissingFile(PathBuf),
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    InvalidInput { path: PathBuf, message: String },
    #[error("unknown team id {0:?}")]
    UnknownTeam(String),
    #[error("model/request mismatch: {0}")]
    ModelMismatch(String),
    #[error("synthetic scenario infeasible: {0}")]
    Infeasible(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input files or configuration, as
    /// opposed to failures while running.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::MissingFile(_)
                | Error::Parse { .. }
                | Error::InvalidInput { .. }
                | Error::UnknownTeam(_)
                | Error::ModelMismatch(_)
                | Error::Infeasible(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
