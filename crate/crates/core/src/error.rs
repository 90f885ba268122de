use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: missing column `{0}`")]
    Schema(String),

    #[error("validation error: speaker `{speaker_id}`, field `{field}`: {reason}")]
    Validation {
        speaker_id: String,
        field: String,
        reason: String,
    },

    #[error("unsupported audio format: {0}")]
    Format(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("degenerate channel pair ({i}, {j}): zero-lag energy is zero")]
    DegenerateChannel { i: usize, j: usize },

    #[error("segment too short: {n_frames} frames, need more than {max_delay}")]
    SegmentTooShort { n_frames: usize, max_delay: usize },

    #[error("non-finite tensor entry at (i={i}, j={j}, d={d})")]
    NonFinite { i: usize, j: usize, d: usize },

    #[error("speakers absent from manifest: {}", .0.join(", "))]
    Join(Vec<String>),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("undefined statistic: {0}")]
    Undefined(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn validation(
        speaker_id: impl Into<String>,
        field: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::Validation {
            speaker_id: speaker_id.into(),
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures caused by the filesystem rather than the data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(_)),
            Error::Json(e) => e.is_io(),
            _ => false,
        }
    }
}
