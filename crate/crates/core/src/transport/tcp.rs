use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::thread;
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Receiver, RecvTimeoutError};
use log::debug;

use super::frame::{read_frame, write_frame};
use super::{PartyId, RoundMessage, Transport};
use crate::error::TransportError;

/// Overrides the address a server binds to (the configured endpoint is still
/// what peers dial).
pub const BIND_ENV_VAR: &str = "SYNTHMPC_BIND";

const HELLO_MAGIC: u32 = 0x5347_4831; // "SGH1"

enum Inbound {
    Frame(RoundMessage),
    Closed,
    Failed(String),
}

/// Framed TCP links to the two peers.
///
/// A reader thread per peer drains the socket into a queue so that large
/// simultaneous sends in one round cannot deadlock on full socket buffers.
pub struct TcpTransport {
    me: PartyId,
    writers: [Option<BufWriter<TcpStream>>; 3],
    inbound: [Option<Receiver<Inbound>>; 3],
    timeout: Duration,
}

impl TcpTransport {
    /// Connects to both peers. For each pair the lower-numbered party
    /// listens and the higher-numbered one dials.
    pub fn connect(
        me: PartyId,
        endpoints: [SocketAddr; 3],
        timeout: Duration,
    ) -> Result<Self, TransportError> {
        let bind_addr = match std::env::var(BIND_ENV_VAR) {
            Ok(s) => s.parse().map_err(|e| {
                TransportError::Frame(format!("bad {BIND_ENV_VAR} value {s:?}: {e}"))
            })?,
            Err(_) => endpoints[me.index()],
        };
        let mut streams: [Option<TcpStream>; 3] = [None, None, None];

        let expect_incoming = PartyId::ALL.iter().filter(|p| p.index() > me.index()).count();
        let listener = if expect_incoming > 0 {
            Some(TcpListener::bind(bind_addr)?)
        } else {
            None
        };

        for peer in PartyId::ALL.iter().filter(|p| p.index() < me.index()) {
            let mut s = dial(endpoints[peer.index()], timeout)?;
            s.write_all(&HELLO_MAGIC.to_le_bytes())?;
            s.write_all(&[me.index() as u8])?;
            debug!("{me} connected to {peer}");
            streams[peer.index()] = Some(s);
        }

        if let Some(listener) = listener {
            for _ in 0..expect_incoming {
                let (mut s, addr) = listener.accept()?;
                let mut hello = [0u8; 5];
                s.read_exact(&mut hello)?;
                let magic = u32::from_le_bytes(hello[0..4].try_into().unwrap());
                let idx = hello[4] as usize;
                if magic != HELLO_MAGIC || idx >= 3 || idx <= me.index() || streams[idx].is_some()
                {
                    return Err(TransportError::Frame(format!(
                        "unexpected handshake from {addr}"
                    )));
                }
                debug!("{me} accepted {}", PartyId::from_index(idx));
                streams[idx] = Some(s);
            }
        }

        let mut writers: [Option<BufWriter<TcpStream>>; 3] = [None, None, None];
        let mut inbound: [Option<Receiver<Inbound>>; 3] = [None, None, None];
        for (idx, s) in streams.into_iter().enumerate() {
            let Some(s) = s else { continue };
            s.set_nodelay(true)?;
            let read_half = s.try_clone()?;
            let (tx, rx) = unbounded();
            thread::Builder::new()
                .name(format!("{me}-reader-{}", PartyId::from_index(idx)))
                .spawn(move || {
                    let mut r = BufReader::with_capacity(1 << 20, read_half);
                    loop {
                        let item = match read_frame(&mut r) {
                            Ok(Some(m)) => Inbound::Frame(m),
                            Ok(None) => Inbound::Closed,
                            Err(e) => Inbound::Failed(e.to_string()),
                        };
                        let stop = !matches!(item, Inbound::Frame(_));
                        if tx.send(item).is_err() || stop {
                            break;
                        }
                    }
                })?;
            writers[idx] = Some(BufWriter::with_capacity(1 << 20, s));
            inbound[idx] = Some(rx);
        }

        Ok(TcpTransport {
            me,
            writers,
            inbound,
            timeout,
        })
    }
}

impl Drop for TcpTransport {
    fn drop(&mut self) {
        // the reader threads hold clones of each socket, so close explicitly
        for w in self.writers.iter_mut().flatten() {
            let _ = w.flush();
            let _ = w.get_ref().shutdown(std::net::Shutdown::Both);
        }
    }
}

fn dial(addr: SocketAddr, timeout: Duration) -> Result<TcpStream, TransportError> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() < deadline => {
                debug!("dial {addr}: {e}; retrying");
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(e.into()),
        }
    }
}

impl Transport for TcpTransport {
    fn me(&self) -> PartyId {
        self.me
    }

    fn send(&mut self, to: PartyId, msg: RoundMessage) -> Result<(), TransportError> {
        let round = msg.round_tag;
        let w = self.writers[to.index()]
            .as_mut()
            .expect("no link to self");
        write_frame(w, &msg).map_err(|e| match e {
            TransportError::Io(_) => TransportError::Disconnected { peer: to, round },
            other => other,
        })
    }

    fn recv(&mut self, from: PartyId, round_tag: u64) -> Result<RoundMessage, TransportError> {
        let rx = self.inbound[from.index()]
            .as_ref()
            .expect("no link from self");
        let disconnected = TransportError::Disconnected {
            peer: from,
            round: round_tag,
        };
        match rx.recv_timeout(self.timeout) {
            Ok(Inbound::Frame(msg)) if msg.round_tag == round_tag => Ok(msg),
            Ok(Inbound::Frame(msg)) => Err(TransportError::Desync {
                peer: from,
                expected: round_tag,
                got: msg.round_tag,
            }),
            Ok(Inbound::Closed) | Err(RecvTimeoutError::Disconnected) => Err(disconnected),
            Ok(Inbound::Failed(e)) => Err(TransportError::Frame(e)),
            Err(RecvTimeoutError::Timeout) => Err(TransportError::Timeout {
                peer: from,
                round: round_tag,
            }),
        }
    }
}
