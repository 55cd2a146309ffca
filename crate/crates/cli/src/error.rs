use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// `pointer` is an RFC 6901 JSON pointer to the offending field.
    #[error("invalid config at {pointer}: {message}")]
    ConfigInvalid { pointer: String, message: String },

    #[error("cannot compare a {a} report with a {b} report")]
    PipelineMismatch { a: String, b: String },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] trisre::Error),
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Self::ConfigInvalid {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        Self::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
