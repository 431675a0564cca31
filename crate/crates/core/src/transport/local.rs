use std::time::Duration;

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError, Sender};

use super::{PartyId, RoundMessage, Transport};
use crate::error::TransportError;

/// In-memory transport for one party of a three-party harness.
pub struct LocalTransport {
    me: PartyId,
    outgoing: [Option<Sender<RoundMessage>>; 3],
    incoming: [Option<Receiver<RoundMessage>>; 3],
    timeout: Duration,
}

/// Builds a fully connected triple of in-memory transports.
pub fn local_transports(timeout: Duration) -> [LocalTransport; 3] {
    // channels[from][to]
    let mut senders: Vec<Vec<Option<Sender<RoundMessage>>>> = vec![vec![None, None, None]; 3];
    let mut receivers: Vec<Vec<Option<Receiver<RoundMessage>>>> =
        (0..3).map(|_| vec![None, None, None]).collect();
    for from in 0..3 {
        for to in 0..3 {
            if from != to {
                let (tx, rx) = unbounded();
                senders[from][to] = Some(tx);
                receivers[to][from] = Some(rx);
            }
        }
    }
    let mut out = Vec::with_capacity(3);
    for (i, (tx, rx)) in senders.into_iter().zip(receivers).enumerate() {
        let mut tx = tx.into_iter();
        let mut rx = rx.into_iter();
        out.push(LocalTransport {
            me: PartyId::from_index(i),
            outgoing: [tx.next().unwrap(), tx.next().unwrap(), tx.next().unwrap()],
            incoming: [rx.next().unwrap(), rx.next().unwrap(), rx.next().unwrap()],
            timeout,
        });
    }
    let mut it = out.into_iter();
    [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()]
}

impl Transport for LocalTransport {
    fn me(&self) -> PartyId {
        self.me
    }

    fn send(&mut self, to: PartyId, msg: RoundMessage) -> Result<(), TransportError> {
        let round = msg.round_tag;
        self.outgoing[to.index()]
            .as_ref()
            .expect("no channel to self")
            .send(msg)
            .map_err(|_| TransportError::Disconnected { peer: to, round })
    }

    fn recv(&mut self, from: PartyId, round_tag: u64) -> Result<RoundMessage, TransportError> {
        let rx = self.incoming[from.index()]
            .as_ref()
            .expect("no channel from self");
        let msg = match rx.recv_timeout(self.timeout) {
            Ok(m) => m,
            Err(RecvTimeoutError::Timeout) => {
                return Err(TransportError::Timeout {
                    peer: from,
                    round: round_tag,
                })
            }
            Err(RecvTimeoutError::Disconnected) => {
                return Err(TransportError::Disconnected {
                    peer: from,
                    round: round_tag,
                })
            }
        };
        if msg.round_tag != round_tag {
            return Err(TransportError::Desync {
                peer: from,
                expected: round_tag,
                got: msg.round_tag,
            });
        }
        Ok(msg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trip() {
        let [mut a, mut b, _c] = local_transports(Duration::from_secs(1));
        let msg = RoundMessage::new(7, vec![1, 2, 3]);
        a.send(PartyId::S2, msg.clone()).unwrap();
        let got = b.recv(PartyId::S1, 7).unwrap();
        assert_eq!(got, msg);
        b.send(PartyId::S1, got).unwrap();
        assert_eq!(a.recv(PartyId::S2, 7).unwrap(), msg);
    }

    #[test]
    fn ring_liveness() {
        let mut ts = local_transports(Duration::from_secs(1));
        for t in ts.iter_mut() {
            let me = t.me();
            t.send(me.next(), RoundMessage::new(0, vec![me.index() as u64]))
                .unwrap();
        }
        for t in ts.iter_mut() {
            let me = t.me();
            let m = t.recv(me.prev(), 0).unwrap();
            assert_eq!(m.payload, vec![me.prev().index() as u64]);
        }
    }

    #[test]
    fn timeout_and_desync() {
        let [mut a, mut b, _c] = local_transports(Duration::from_millis(20));
        assert!(matches!(
            b.recv(PartyId::S1, 0),
            Err(TransportError::Timeout { round: 0, .. })
        ));
        a.send(PartyId::S2, RoundMessage::new(5, vec![])).unwrap();
        assert!(matches!(
            b.recv(PartyId::S1, 4),
            Err(TransportError::Desync {
                expected: 4,
                got: 5,
                ..
            })
        ));
    }

    #[test]
    fn dropped_peer_is_disconnect() {
        let [a, mut b, _c] = local_transports(Duration::from_secs(5));
        drop(a);
        assert!(matches!(
            b.recv(PartyId::S1, 0),
            Err(TransportError::Disconnected { .. })
        ));
    }
}
