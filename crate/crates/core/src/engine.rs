//! Per-party protocol context and the in-process three-party harness.

use std::thread;
use std::time::Duration;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ring::FixedPointCodec;
use crate::sharing::PartyRandomness;
use crate::transport::{local_transports, PartyId, RoundMessage, Transport};

/// Communication counters for one party.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CommStats {
    pub rounds: u64,
    pub messages_sent: u64,
    /// Ring elements sent, excluding frame headers.
    pub elements_sent: u64,
    pub elements_received: u64,
}

impl CommStats {
    pub fn bytes_sent(&self) -> u64 {
        self.elements_sent * 8 + self.messages_sent * crate::transport::FRAME_HEADER_LEN as u64
    }

    pub fn since(&self, earlier: &CommStats) -> CommStats {
        CommStats {
            rounds: self.rounds - earlier.rounds,
            messages_sent: self.messages_sent - earlier.messages_sent,
            elements_sent: self.elements_sent - earlier.elements_sent,
            elements_received: self.elements_received - earlier.elements_received,
        }
    }
}

/// What a party sends in one round.
#[derive(Default)]
pub(crate) struct Outgoing {
    pub next: Option<Vec<u64>>,
    pub prev: Option<Vec<u64>>,
}

/// What a party expects to receive in one round.
#[derive(Clone, Copy, Default)]
pub(crate) struct Expect {
    pub next: bool,
    pub prev: bool,
}

#[derive(Default)]
pub(crate) struct Incoming {
    pub next: Option<Vec<u64>>,
    pub prev: Option<Vec<u64>>,
}

/// One server's execution context: its transport, pairwise randomness,
/// round counter and transcript hash.
///
/// All three parties run the same sequence of protocol calls, so round
/// tags and PRF counters advance in lockstep.
pub struct Party {
    id: PartyId,
    transport: Box<dyn Transport>,
    rand: PartyRandomness,
    codec: FixedPointCodec,
    round: u64,
    transcript: Sha256,
    stats: CommStats,
}

impl Party {
    /// Runs the key-setup handshake: each party sends a fresh 32-byte key to
    /// its successor, so the key `k_i` ends up known to parties `i-1` and `i`.
    pub fn setup(
        transport: Box<dyn Transport>,
        seed_material: [u8; 32],
        codec: FixedPointCodec,
    ) -> Result<Party> {
        let id = transport.me();
        let mut party = Party {
            id,
            transport,
            rand: PartyRandomness::new(id, [0; 32], [0; 32]),
            codec,
            round: 0,
            transcript: Sha256::new(),
            stats: CommStats::default(),
        };
        let mut rng = ChaCha12Rng::from_seed(seed_material);
        let mut my_key = [0u8; 32];
        rng.fill_bytes(&mut my_key);
        let words: Vec<u64> = my_key
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let inc = party.exchange(
            Outgoing {
                next: Some(words),
                prev: None,
            },
            Expect {
                next: false,
                prev: true,
            },
        )?;
        let got = inc.prev.unwrap();
        if got.len() != 4 {
            return Err(Error::Contract("setup key must be 4 words".into()));
        }
        let mut own_key = [0u8; 32];
        for (i, w) in got.iter().enumerate() {
            own_key[8 * i..8 * i + 8].copy_from_slice(&w.to_le_bytes());
        }
        party.rand = PartyRandomness::new(id, own_key, my_key);
        Ok(party)
    }

    /// Seed material for a party derived from a session seed.
    pub fn derive_seed_material(session_seed: u64, party: PartyId) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"synthmpc-party-seed");
        h.update(session_seed.to_le_bytes());
        h.update([party.index() as u8]);
        h.finalize().into()
    }

    #[inline]
    pub fn id(&self) -> PartyId {
        self.id
    }

    #[inline]
    pub fn codec(&self) -> FixedPointCodec {
        self.codec
    }

    #[inline]
    pub fn frac_bits(&self) -> u32 {
        self.codec.frac_bits()
    }

    pub fn stats(&self) -> CommStats {
        self.stats
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    /// SHA-256 over every frame sent and received so far, in order.
    pub fn transcript_digest(&self) -> [u8; 32] {
        self.transcript.clone().finalize().into()
    }

    pub(crate) fn randomness(&mut self) -> &mut PartyRandomness {
        &mut self.rand
    }

    /// One synchronous round. Every party must call this at the same
    /// protocol step, even when it has nothing to send.
    pub(crate) fn exchange(&mut self, out: Outgoing, expect: Expect) -> Result<Incoming> {
        let tag = self.round;
        self.round += 1;
        self.stats.rounds += 1;
        let (next, prev) = (self.id.next(), self.id.prev());
        for (peer, payload) in [(next, out.next), (prev, out.prev)] {
            if let Some(p) = payload {
                self.record(b'S', peer, tag, &p);
                self.stats.messages_sent += 1;
                self.stats.elements_sent += p.len() as u64;
                self.transport.send(peer, RoundMessage::new(tag, p))?;
            }
        }
        let mut inc = Incoming::default();
        if expect.next {
            let m = self.transport.recv(next, tag)?;
            self.record(b'R', next, tag, &m.payload);
            self.stats.elements_received += m.payload.len() as u64;
            inc.next = Some(m.payload);
        }
        if expect.prev {
            let m = self.transport.recv(prev, tag)?;
            self.record(b'R', prev, tag, &m.payload);
            self.stats.elements_received += m.payload.len() as u64;
            inc.prev = Some(m.payload);
        }
        Ok(inc)
    }

    fn record(&mut self, dir: u8, peer: PartyId, tag: u64, payload: &[u64]) {
        self.transcript.update([dir, peer.index() as u8]);
        self.transcript.update(tag.to_le_bytes());
        self.transcript.update((payload.len() as u64).to_le_bytes());
        let mut buf = Vec::with_capacity(payload.len() * 8);
        for w in payload {
            buf.extend_from_slice(&w.to_le_bytes());
        }
        self.transcript.update(&buf);
    }
}

/// Settings for an in-process three-party run.
#[derive(Clone, Copy, Debug)]
pub struct HarnessConfig {
    pub session_seed: u64,
    pub round_timeout: Duration,
    pub codec: FixedPointCodec,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            session_seed: 0,
            round_timeout: crate::transport::DEFAULT_ROUND_TIMEOUT,
            codec: FixedPointCodec::default(),
        }
    }
}

impl HarnessConfig {
    pub fn with_seed(session_seed: u64) -> Self {
        HarnessConfig {
            session_seed,
            ..Default::default()
        }
    }
}

/// Result of one party in a harness run.
#[derive(Debug, Clone)]
pub struct PartyOutcome<R> {
    pub output: R,
    pub stats: CommStats,
    pub transcript: [u8; 32],
}

/// Runs `protocol` as all three parties on threads connected by in-memory
/// channels. The closure sees each party's context and returns its output.
pub fn run_three_party_local<R, F>(config: HarnessConfig, protocol: F) -> Result<[PartyOutcome<R>; 3]>
where
    R: Send,
    F: Fn(&mut Party) -> Result<R> + Sync,
{
    let transports = local_transports(config.round_timeout);
    let protocol = &protocol;
    let results: Vec<Result<PartyOutcome<R>>> = thread::scope(|scope| {
        let handles: Vec<_> = transports
            .into_iter()
            .map(|t| {
                thread::Builder::new()
                    .name(format!("party-{}", t.me()))
                    .spawn_scoped(scope, move || {
                        let me = t.me();
                        let seed = Party::derive_seed_material(config.session_seed, me);
                        let mut party = Party::setup(Box::new(t), seed, config.codec)?;
                        let output = protocol(&mut party)?;
                        Ok(PartyOutcome {
                            output,
                            stats: party.stats(),
                            transcript: party.transcript_digest(),
                        })
                    })
                    .expect("spawn party thread")
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("party thread panicked"))
            .collect()
    });
    // Report the root cause rather than a peer's disconnect.
    let mut outs = Vec::with_capacity(3);
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(o) => outs.push(o),
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        let idx = errors
            .iter()
            .position(|e| !matches!(e, Error::Transport(_)))
            .unwrap_or(0);
        return Err(errors.swap_remove(idx));
    }
    let mut it = outs.into_iter();
    Ok([it.next().unwrap(), it.next().unwrap(), it.next().unwrap()])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_protocol_sends_nothing_after_setup() {
        let outs = run_three_party_local(HarnessConfig::default(), |_p| Ok(())).unwrap();
        for o in &outs {
            assert_eq!(o.stats.rounds, 1);
            assert_eq!(o.stats.elements_sent, 4);
        }
    }

    #[test]
    fn setup_keys_form_zero_sharing() {
        let outs = run_three_party_local(HarnessConfig::with_seed(5), |p| {
            Ok(p.randomness().zero_shares(3))
        })
        .unwrap();
        for k in 0..3 {
            let s = outs
                .iter()
                .fold(0u64, |a, o| a.wrapping_add(o.output[k]));
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn error_in_one_party_surfaces() {
        let err = run_three_party_local(HarnessConfig::default(), |p| {
            if p.id() == PartyId::S2 {
                Err(Error::Contract("boom".into()))
            } else {
                p.exchange(
                    Outgoing::default(),
                    Expect {
                        next: true,
                        prev: true,
                    },
                )?;
                Ok(())
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::Contract(_)), "{err}");
    }

    #[test]
    fn stalled_round_times_out() {
        let cfg = HarnessConfig {
            round_timeout: Duration::from_millis(50),
            ..Default::default()
        };
        let err = run_three_party_local(cfg, |p| {
            // nobody sends, everybody waits
            p.exchange(
                Outgoing::default(),
                Expect {
                    next: true,
                    prev: false,
                },
            )?;
            Ok(())
        })
        .unwrap_err();
        assert!(
            matches!(
                err,
                Error::Transport(crate::error::TransportError::Timeout { round: 1, .. })
            ),
            "{err}"
        );
    }
}
