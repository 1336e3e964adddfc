//! Message plane connecting compute parties, the arm puller, the reward
//! receiver and the environment.
//!
//! Every node owns an [`Endpoint`] with one directed link per peer. A round is a
//! call to [`Endpoint::exchange_round`]: the node sends its outgoing payloads,
//! then blocks until every expected peer has delivered. Barriers are implicit in
//! this blocking exchange; there is no coordinator.

mod frame;
mod ledger;
mod local;
mod tcp;

use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};

use crate::error::{Error, Result};

pub use frame::{
    bytes_to_words, decode_frame, encode_frame, label_hash, words_to_bytes, FrameHeader,
    HEADER_LEN,
};
pub use ledger::{LedgerEntry, RoundLedger};
pub use local::local_mesh;
pub use tcp::{bind_listeners, connect_tcp};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Role {
    Compute,
    Puller,
    Receiver,
    Environment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PartyId {
    pub index: usize,
    pub role: Role,
}

/// Node numbering: compute parties `0..n`, then the puller, the receiver and
/// the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Topology {
    parties: usize,
}

impl Topology {
    pub fn new(parties: usize) -> Result<Self> {
        if parties < 2 {
            return Err(Error::Config(format!(
                "need at least 2 compute parties, got {parties}"
            )));
        }
        Ok(Topology { parties })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn nodes(&self) -> usize {
        self.parties + 3
    }

    pub fn puller(&self) -> PartyId {
        PartyId {
            index: self.parties,
            role: Role::Puller,
        }
    }

    pub fn receiver(&self) -> PartyId {
        PartyId {
            index: self.parties + 1,
            role: Role::Receiver,
        }
    }

    pub fn environment(&self) -> PartyId {
        PartyId {
            index: self.parties + 2,
            role: Role::Environment,
        }
    }

    pub fn compute(&self, i: usize) -> PartyId {
        assert!(i < self.parties, "compute party {i} out of range");
        PartyId {
            index: i,
            role: Role::Compute,
        }
    }

    pub fn node(&self, index: usize) -> Result<PartyId> {
        let role = match index {
            i if i < self.parties => Role::Compute,
            i if i == self.parties => Role::Puller,
            i if i == self.parties + 1 => Role::Receiver,
            i if i == self.parties + 2 => Role::Environment,
            _ => return Err(Error::Role(format!("node {index} does not exist"))),
        };
        Ok(PartyId { index, role })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

/// One payload observed at a node.
#[derive(Clone, Debug)]
pub struct TranscriptEntry {
    pub direction: Direction,
    pub peer: usize,
    pub label: String,
    pub payload: Vec<u8>,
}

pub type Transcript = Arc<Mutex<Vec<TranscriptEntry>>>;

pub(crate) struct Link {
    pub(crate) tx: Sender<Vec<u8>>,
    pub(crate) rx: Receiver<Vec<u8>>,
    send_seq: u64,
    recv_seq: u64,
}

impl Link {
    pub(crate) fn new(tx: Sender<Vec<u8>>, rx: Receiver<Vec<u8>>) -> Self {
        Link {
            tx,
            rx,
            send_seq: 0,
            recv_seq: 0,
        }
    }
}

pub struct Endpoint {
    id: PartyId,
    topology: Topology,
    session: u64,
    timeout: Duration,
    links: Vec<Option<Link>>,
    ledger: RoundLedger,
    transcript: Option<Transcript>,
    backend: &'static str,
    writers: Vec<JoinHandle<()>>,
}

impl Endpoint {
    pub(crate) fn new(
        id: PartyId,
        topology: Topology,
        session: u64,
        links: Vec<Option<Link>>,
        backend: &'static str,
    ) -> Self {
        Endpoint {
            id,
            topology,
            session,
            timeout: DEFAULT_TIMEOUT,
            links,
            ledger: RoundLedger::new(),
            transcript: None,
            backend,
            writers: Vec::new(),
        }
    }

    pub(crate) fn with_writers(mut self, writers: Vec<JoinHandle<()>>) -> Self {
        self.writers = writers;
        self
    }

    pub fn id(&self) -> PartyId {
        self.id
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn session(&self) -> u64 {
        self.session
    }

    pub fn backend(&self) -> &'static str {
        self.backend
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    pub fn ledger(&self) -> &RoundLedger {
        &self.ledger
    }

    pub fn take_ledger(&mut self) -> RoundLedger {
        std::mem::take(&mut self.ledger)
    }

    /// Records every payload sent or received from now on.
    pub fn capture(&mut self) -> Transcript {
        let t = Transcript::default();
        self.transcript = Some(t.clone());
        t
    }

    fn link(&mut self, peer: usize) -> Result<&mut Link> {
        let me = self.id.index;
        self.links
            .get_mut(peer)
            .and_then(|l| l.as_mut())
            .ok_or_else(|| Error::Role(format!("node {me} has no link to node {peer}")))
    }

    fn log(&self, direction: Direction, peer: usize, label: &str, payload: &[u8]) {
        if let Some(t) = &self.transcript {
            t.lock().unwrap().push(TranscriptEntry {
                direction,
                peer,
                label: label.to_string(),
                payload: payload.to_vec(),
            });
        }
    }

    /// Sends without touching the ledger.
    pub fn send(&mut self, to: usize, label: &str, payload: &[u8]) -> Result<()> {
        let session = self.session;
        let link = self.link(to)?;
        let frame = encode_frame(session, link.send_seq, label, payload)?;
        link.send_seq += 1;
        link.tx.send(frame).map_err(|_| Error::Disconnected(to))?;
        self.log(Direction::Sent, to, label, payload);
        Ok(())
    }

    /// Receives the next frame from `from`, checking session, sequence and label.
    pub fn recv(&mut self, from: usize, label: &str) -> Result<Vec<u8>> {
        let (me, session, timeout) = (self.id.index, self.session, self.timeout);
        let link = self.link(from)?;
        let frame = match link.rx.recv_timeout(timeout) {
            Ok(f) => f,
            Err(RecvTimeoutError::Timeout) => {
                return Err(Error::Timeout {
                    peer: from,
                    label: label.to_string(),
                })
            }
            Err(RecvTimeoutError::Disconnected) => return Err(Error::Disconnected(from)),
        };
        let (header, body) = decode_frame(&frame)?;
        let desync = |detail: String| Error::Desync {
            from,
            to: me,
            detail,
        };
        if header.session != session {
            return Err(desync(format!(
                "session {} != {}",
                header.session, session
            )));
        }
        if header.seq != link.recv_seq {
            return Err(desync(format!(
                "sequence {} != expected {}",
                header.seq, link.recv_seq
            )));
        }
        if header.label != label_hash(label) {
            return Err(desync(format!("peer is not in '{label}'")));
        }
        link.recv_seq += 1;
        let body = body.to_vec();
        self.log(Direction::Received, from, label, &body);
        Ok(body)
    }

    /// One synchronous round: send all `outgoing`, then collect one payload from
    /// each node in `incoming` (returned in that order). Counted in the ledger.
    pub fn exchange_round(
        &mut self,
        label: &str,
        outgoing: &[(usize, Vec<u8>)],
        incoming: &[usize],
    ) -> Result<Vec<Vec<u8>>> {
        let mut sent = 0u64;
        for (to, payload) in outgoing {
            self.send(*to, label, payload)?;
            sent += payload.len() as u64;
        }
        let mut received = Vec::with_capacity(incoming.len());
        let mut recv_bytes = 0u64;
        for &from in incoming {
            let p = self.recv(from, label)?;
            recv_bytes += p.len() as u64;
            received.push(p);
        }
        self.ledger.record_round(label, sent, recv_bytes);
        Ok(received)
    }
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        self.links.clear();
        for w in self.writers.drain(..) {
            let _ = w.join();
        }
    }
}
