use std::io;

use thiserror::Error;

/// Errors produced by the sampling engine.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller-supplied data or arguments are invalid.
    #[error("invalid input: {0}")]
    Input(String),
    /// An operation was applied to a value in the wrong state.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A file does not follow its declared binary or text layout.
    #[error("malformed {kind}: {reason}")]
    Format { kind: &'static str, reason: String },
    /// A frame could not be written into a keyframe store.
    #[error("encode failed: {0}")]
    Encode(String),
    /// A requested frame is not present in a keyframe store.
    #[error("frame {0} is not stored")]
    Lookup(u32),
    /// Stored bytes do not match their checksum.
    #[error(
        "checksum mismatch for frame {frame_id}: stored {stored:#010x}, computed {computed:#010x}"
    )]
    Corruption {
        frame_id: u32,
        stored: u32,
        computed: u32,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn format(kind: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            kind,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
