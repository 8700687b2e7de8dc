use std::path::PathBuf;

use hrl_core::HrlError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error(transparent)]
    Core(#[from] HrlError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// 2 for bad input, 1 when a computation could not be carried out.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid { .. } | Self::Io { .. } => 2,
            Self::Core(HrlError::InvalidParam { .. } | HrlError::OrderTooHigh { .. }) => 2,
            Self::Core(_) => 1,
        }
    }
}
