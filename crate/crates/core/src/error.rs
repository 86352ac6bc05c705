use thiserror::Error as ThisError;

use crate::chaos_game::CgrError;
use crate::cwt_engine::CwtError;
use crate::fcgs_encoder::EncodeError;
use crate::intron_scan::ScanError;
use crate::pipeline::ConfigError;
use crate::sequence_io::SequenceError;
use crate::viz_export::RenderError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse error classes, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Usage,
    Io,
    Validation,
    Numeric,
}

impl ErrorFamily {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorFamily::Usage => 2,
            ErrorFamily::Io => 3,
            ErrorFamily::Validation => 4,
            ErrorFamily::Numeric => 5,
        }
    }
}

#[derive(Debug, ThisError)]
pub enum Error {
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Cgr(#[from] CgrError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Cwt(#[from] CwtError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn family(&self) -> ErrorFamily {
        match self {
            Error::Io { .. } => ErrorFamily::Io,
            Error::Stage { source, .. } => source.family(),
            Error::Config(_) => ErrorFamily::Usage,
            Error::Sequence(e) => match e {
                SequenceError::Io(_) | SequenceError::Fetch(_) => ErrorFamily::Io,
                _ => ErrorFamily::Validation,
            },
            Error::Cgr(e) => match e {
                CgrError::OrderTooLarge { .. } => ErrorFamily::Numeric,
                _ => ErrorFamily::Validation,
            },
            Error::Encode(_) => ErrorFamily::Validation,
            Error::Cwt(_) => ErrorFamily::Numeric,
            Error::Scan(e) => match e {
                ScanError::LabelNotFound(_) => ErrorFamily::Validation,
                _ => ErrorFamily::Numeric,
            },
            Error::Render(RenderError::Io(_)) => ErrorFamily::Io,
            Error::Render(_) => ErrorFamily::Validation,
        }
    }
}
