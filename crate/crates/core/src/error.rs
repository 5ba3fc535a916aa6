use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot decode image {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("invalid TI-RADS category {0:?}: expected a leading digit 1-5 with an optional subcategory letter")]
    Label(String),

    #[error("mask has no foreground pixels")]
    EmptyMask,

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    #[error("cannot fit scaler: {0}")]
    Fit(String),

    #[error("cannot resample: {0}")]
    Resample(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("cannot stratify: {0}")]
    Stratification(String),

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(expected: impl ToString, got: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }
}
