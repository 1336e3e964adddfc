use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use crossbeam_channel::{unbounded, Sender};

use super::frame::{FrameHeader, HEADER_LEN};
use super::{Endpoint, Link, Topology};
use crate::error::{Error, Result};

/// Binds one listener per address; port 0 picks a free port.
pub fn bind_listeners(addrs: &[SocketAddr]) -> Result<Vec<TcpListener>> {
    addrs
        .iter()
        .map(|a| TcpListener::bind(a).map_err(Error::from))
        .collect()
}

fn handshake_bytes(index: usize, session: u64) -> [u8; 16] {
    let mut b = [0u8; 16];
    b[..8].copy_from_slice(&(index as u64).to_le_bytes());
    b[8..].copy_from_slice(&session.to_le_bytes());
    b
}

fn connect_with_retry(addr: SocketAddr, deadline: Instant) -> Result<TcpStream> {
    loop {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) if Instant::now() >= deadline => return Err(Error::Io(e)),
            Err(_) => thread::sleep(Duration::from_millis(20)),
        }
    }
}

fn spawn_reader(mut stream: TcpStream, tx: Sender<Vec<u8>>) {
    thread::spawn(move || loop {
        let mut header = [0u8; HEADER_LEN];
        if stream.read_exact(&mut header).is_err() {
            return;
        }
        let len = match FrameHeader::from_bytes(&header) {
            Ok(h) => h.len as usize,
            Err(_) => return,
        };
        let mut frame = header.to_vec();
        frame.resize(HEADER_LEN + len, 0);
        if stream.read_exact(&mut frame[HEADER_LEN..]).is_err() {
            return;
        }
        if tx.send(frame).is_err() {
            return;
        }
    });
}

fn spawn_writer(mut stream: TcpStream) -> (Sender<Vec<u8>>, JoinHandle<()>) {
    let (tx, rx) = unbounded::<Vec<u8>>();
    let handle = thread::spawn(move || {
        for frame in rx {
            if stream.write_all(&frame).is_err() {
                return;
            }
        }
        let _ = stream.flush();
        let _ = stream.shutdown(Shutdown::Write);
    });
    (tx, handle)
}

/// Joins the TCP mesh as node `me`. Each node dials every lower-numbered node
/// and accepts connections from every higher-numbered one.
pub fn connect_tcp(
    me: usize,
    topology: Topology,
    addrs: &[SocketAddr],
    listener: TcpListener,
    session: u64,
    timeout: Duration,
) -> Result<Endpoint> {
    let n = topology.nodes();
    if addrs.len() != n {
        return Err(Error::Config(format!(
            "{} addresses given for {} nodes",
            addrs.len(),
            n
        )));
    }
    let deadline = Instant::now() + timeout;
    let mut streams: Vec<Option<TcpStream>> = (0..n).map(|_| None).collect();
    for (peer, addr) in addrs.iter().enumerate().take(me) {
        let mut s = connect_with_retry(*addr, deadline)?;
        s.write_all(&handshake_bytes(me, session))?;
        streams[peer] = Some(s);
    }
    listener.set_nonblocking(true)?;
    let mut pending = n - 1 - me;
    while pending > 0 {
        match listener.accept() {
            Ok((mut s, _)) => {
                s.set_nonblocking(false)?;
                s.set_read_timeout(Some(timeout))?;
                let mut hs = [0u8; 16];
                s.read_exact(&mut hs)?;
                s.set_read_timeout(None)?;
                let peer = u64::from_le_bytes(hs[..8].try_into().unwrap()) as usize;
                let their_session = u64::from_le_bytes(hs[8..].try_into().unwrap());
                if their_session != session || peer <= me || peer >= n || streams[peer].is_some() {
                    return Err(Error::Desync {
                        from: peer,
                        to: me,
                        detail: format!("bad handshake (session {their_session})"),
                    });
                }
                streams[peer] = Some(s);
                pending -= 1;
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    return Err(Error::Timeout {
                        peer: me,
                        label: "tcp accept".into(),
                    });
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mut links = Vec::with_capacity(n);
    let mut writers = Vec::new();
    for s in streams {
        match s {
            None => links.push(None),
            Some(stream) => {
                stream.set_nodelay(true)?;
                let read_half = stream.try_clone()?;
                let (in_tx, in_rx) = unbounded();
                spawn_reader(read_half, in_tx);
                let (out_tx, handle) = spawn_writer(stream);
                writers.push(handle);
                links.push(Some(Link::new(out_tx, in_rx)));
            }
        }
    }
    let id = topology.node(me)?;
    let mut ep = Endpoint::new(id, topology, session, links, "tcp").with_writers(writers);
    ep.set_timeout(timeout);
    Ok(ep)
}
