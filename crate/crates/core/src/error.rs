use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
///
/// Variants map onto CLI exit codes through [`Error::exit_code`]:
/// configuration problems exit with 2, bad or inconsistent data with 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("mismatch: {0}")]
    Mismatch(String),
    #[error("degenerate geometry at frame {frame}: participant {participant} is {distance:.4} m from ego")]
    Degenerate {
        frame: usize,
        participant: String,
        distance: f64,
    },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Divergence { epoch: usize, loss: f64 },
    #[error("format error: {0}")]
    Format(String),
    #[error("value out of range: {0}")]
    Range(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attaches a frame index to a degenerate-geometry error.
    pub fn at_frame(self, frame: usize) -> Self {
        match self {
            Error::Degenerate {
                participant,
                distance,
                ..
            } => Error::Degenerate {
                frame,
                participant,
                distance,
            },
            other => other,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Parse { .. }
            | Error::Validation(_)
            | Error::Data(_)
            | Error::Mismatch(_)
            | Error::Degenerate { .. }
            | Error::Shape(_)
            | Error::Divergence { .. }
            | Error::Format(_)
            | Error::Range(_) => 3,
            Error::Io { .. } => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
