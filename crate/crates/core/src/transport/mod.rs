//! Party identities and round-synchronous message passing.
//!
//! Two backends implement [`Transport`]: in-memory channels for running all
//! three parties inside one process, and framed TCP between processes. Both
//! carry the same [`RoundMessage`] values, so a protocol produces the same
//! transcript on either.

mod frame;
mod local;
mod tcp;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use frame::{decode_frame, encode_frame, read_frame, write_frame, FRAME_HEADER_LEN};
pub use local::{local_transports, LocalTransport};
pub use tcp::{TcpTransport, BIND_ENV_VAR};

use crate::error::TransportError;

/// Default per-round receive timeout.
pub const DEFAULT_ROUND_TIMEOUT: Duration = Duration::from_secs(60);

/// One of the three computing servers, `S1`, `S2` or `S3`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PartyId(u8);

impl PartyId {
    pub const S1: PartyId = PartyId(0);
    pub const S2: PartyId = PartyId(1);
    pub const S3: PartyId = PartyId(2);
    pub const ALL: [PartyId; 3] = [PartyId::S1, PartyId::S2, PartyId::S3];

    /// From the 1-based server number.
    pub fn new(number: u8) -> Option<Self> {
        (1..=3).contains(&number).then(|| PartyId(number - 1))
    }

    pub fn from_index(index: usize) -> Self {
        assert!(index < 3, "party index {index} out of range");
        PartyId(index as u8)
    }

    /// 0-based index.
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 1-based server number.
    #[inline]
    pub fn number(self) -> u8 {
        self.0 + 1
    }

    #[inline]
    pub fn next(self) -> PartyId {
        PartyId((self.0 + 1) % 3)
    }

    #[inline]
    pub fn prev(self) -> PartyId {
        PartyId((self.0 + 2) % 3)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.number())
    }
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundMessage {
    pub round_tag: u64,
    pub payload: Vec<u64>,
}

impl RoundMessage {
    pub fn new(round_tag: u64, payload: Vec<u64>) -> Self {
        RoundMessage { round_tag, payload }
    }
}

/// Point-to-point links from one party to its two peers.
///
/// Messages from a given peer are delivered exactly once and in order;
/// `recv` blocks until the message tagged `round_tag` arrives and fails if a
/// different tag shows up first.
pub trait Transport: Send {
    fn me(&self) -> PartyId;

    fn send(&mut self, to: PartyId, msg: RoundMessage) -> Result<(), TransportError>;

    fn recv(&mut self, from: PartyId, round_tag: u64) -> Result<RoundMessage, TransportError>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_neighbours() {
        for p in PartyId::ALL {
            assert_eq!(p.prev().next(), p);
            assert_eq!(p.next().prev(), p);
            assert_ne!(p.next(), p);
        }
        assert_eq!(PartyId::S1.next(), PartyId::S2);
        assert_eq!(PartyId::S1.prev(), PartyId::S3);
        assert_eq!(PartyId::new(3), Some(PartyId::S3));
        assert_eq!(PartyId::new(0), None);
        assert_eq!(PartyId::new(4), None);
        assert_eq!(PartyId::S2.to_string(), "S2");
    }
}
