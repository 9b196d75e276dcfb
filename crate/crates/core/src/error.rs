use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong inside the expansion engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite numeric input: {0}")]
    NumericInput(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("not a probability vector: {0}")]
    Simplex(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("degenerate vector: {0}")]
    DegenerateVector(String),

    #[error("requested rank {requested} but the data only supports rank {achievable}")]
    Rank { requested: usize, achievable: usize },

    #[error("class {class} ({name}) has no exemplars")]
    Coverage { class: usize, name: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("objective became non-finite at ascent step {step}")]
    Divergence { step: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by malformed data or files rather than arguments or numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Format { .. }
                | Error::Io { .. }
                | Error::Json { .. }
                | Error::Input(_)
                | Error::Shape(_)
                | Error::Coverage { .. }
                | Error::Rank { .. }
        )
    }
}
