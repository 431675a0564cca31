use std::io;

use thiserror::Error;

use crate::transport::PartyId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("peer {peer} disconnected during round {round}")]
    Disconnected { peer: PartyId, round: u64 },
    #[error("timed out waiting for {peer} in round {round}")]
    Timeout { peer: PartyId, round: u64 },
    #[error("protocol desync with {peer}: expected round {expected}, got {got}")]
    Desync { peer: PartyId, expected: u64, got: u64 },
    #[error("malformed frame: {0}")]
    Frame(String),
    #[error("transport I/O: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside encodable range (|x| < {limit})")]
    Range { value: f64, limit: f64 },
    #[error("share integrity: {0}")]
    Integrity(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("ingestion error at {location}: {message}")]
    Ingest { location: String, message: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("share file: {0}")]
    ShareFormat(String),
    #[error("{phase} phase failed: {source}")]
    Phase {
        phase: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("I/O: {0}")]
    Io(#[from] io::Error),
}

impl Error {
    pub fn ingest(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Ingest {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn in_phase(self, phase: &'static str) -> Self {
        match self {
            e @ Error::Phase { .. } => e,
            e => Error::Phase {
                phase,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Phase { source, .. } => source.exit_code(),
            Error::Param(_) | Error::Range { .. } => 2,
            Error::Ingest { .. } | Error::ShareFormat(_) | Error::Io(_) => 3,
            Error::Integrity(_)
            | Error::Transport(_)
            | Error::Contract(_)
            | Error::Degenerate(_) => 4,
        }
    }
}
