//! Reliable, ordered, message-preserving connections.
//!
//! On a byte stream each message is a frame: 4-byte big-endian length then
//! the payload. The loopback variant moves whole messages through in-process
//! queues and never blocks when used from a single thread in lockstep.

use std::collections::HashMap;
use std::io::{self, Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, Sender, TryRecvError};
use std::sync::{Arc, Mutex};
use thiserror::Error;

/// Largest payload a frame may carry.
pub const MAX_FRAME: usize = 1 << 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("no listener at `{0}`")]
    Unreachable(String),
    #[error("listener at `{0}` refused the connection")]
    Refused(String),
    #[error("connection closed")]
    Closed,
    #[error("payload of {0} bytes exceeds the frame limit")]
    Oversize(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ric,
    E2Node,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub address: String,
    pub role: Role,
}

/// Non-blocking receive result.
#[derive(Debug, PartialEq, Eq)]
pub enum Polled {
    Message(Vec<u8>),
    Empty,
    Closed,
}

pub trait Connection: Send {
    fn send(&mut self, payload: &[u8]) -> Result<(), TransportError>;
    /// Blocks until a message arrives; `None` once the peer has closed and
    /// every queued message has been consumed.
    fn recv(&mut self) -> Option<Vec<u8>>;
    fn try_recv(&mut self) -> Polled;
    fn close(&mut self);
}

pub fn encode_frame(payload: &[u8]) -> Result<Vec<u8>, TransportError> {
    if payload.len() > MAX_FRAME {
        return Err(TransportError::Oversize(payload.len()));
    }
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&(payload.len() as u32).to_be_bytes());
    out.extend_from_slice(payload);
    Ok(out)
}

/// Reads one frame. `Ok(None)` on a clean end of stream at a frame boundary.
pub fn read_frame<R: Read>(r: &mut R) -> io::Result<Option<Vec<u8>>> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(io::ErrorKind::UnexpectedEof.into()),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("frame length {len} exceeds limit"),
        ));
    }
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    Ok(Some(buf))
}

// ---------------------------------------------------------------------------
// Loopback

pub struct LoopbackConnection {
    tx: Option<Sender<Vec<u8>>>,
    rx: Receiver<Vec<u8>>,
}

impl LoopbackConnection {
    /// Two connected ends.
    pub fn pair() -> (LoopbackConnection, LoopbackConnection) {
        let (a_tx, b_rx) = mpsc::channel();
        let (b_tx, a_rx) = mpsc::channel();
        (
            LoopbackConnection {
                tx: Some(a_tx),
                rx: a_rx,
            },
            LoopbackConnection {
                tx: Some(b_tx),
                rx: b_rx,
            },
        )
    }
}

impl Connection for LoopbackConnection {
    fn send(&mut self, payload: &[u8]) -> Result<(), TransportError> {
        if payload.len() > MAX_FRAME {
            return Err(TransportError::Oversize(payload.len()));
        }
        let tx = self.tx.as_ref().ok_or(TransportError::Closed)?;
        tx.send(payload.to_vec()).map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Option<Vec<u8>> {
        self.rx.recv().ok()
    }

    fn try_recv(&mut self) -> Polled {
        match self.rx.try_recv() {
            Ok(m) => Polled::Message(m),
            Err(TryRecvError::Empty) => Polled::Empty,
            Err(TryRecvError::Disconnected) => Polled::Closed,
        }
    }

    fn close(&mut self) {
        self.tx = None;
    }
}

/// Name registry for loopback listeners.
#[derive(Clone, Default)]
pub struct LoopbackNetwork {
    listeners: Arc<Mutex<HashMap<String, Sender<LoopbackConnection>>>>,
}

pub struct LoopbackListener {
    name: String,
    incoming: Receiver<LoopbackConnection>,
}

impl LoopbackNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn listen(&self, name: &str) -> LoopbackListener {
        let (tx, rx) = mpsc::channel();
        self.listeners.lock().unwrap().insert(name.to_owned(), tx);
        LoopbackListener {
            name: name.to_owned(),
            incoming: rx,
        }
    }

    pub fn connect(&self, name: &str) -> Result<LoopbackConnection, TransportError> {
        let mut map = self.listeners.lock().unwrap();
        let tx = map
            .get(name)
            .ok_or_else(|| TransportError::Unreachable(name.to_owned()))?;
        let (ours, theirs) = LoopbackConnection::pair();
        if tx.send(theirs).is_err() {
            map.remove(name);
            return Err(TransportError::Refused(name.to_owned()));
        }
        Ok(ours)
    }
}

impl LoopbackListener {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn accept(&self) -> Option<LoopbackConnection> {
        self.incoming.recv().ok()
    }

    pub fn try_accept(&self) -> Option<LoopbackConnection> {
        self.incoming.try_recv().ok()
    }
}

// ---------------------------------------------------------------------------
// TCP

pub struct TcpConnection {
    stream: TcpStream,
    pending: Vec<u8>,
    closed: bool,
}

impl TcpConnection {
    pub fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Self {
            stream,
            pending: Vec::new(),
            closed: false,
        })
    }

    pub fn connect(addr: &str) -> Result<Self, TransportError> {
        let addrs: Vec<_> = addr
            .to_socket_addrs()
            .map_err(|_| TransportError::Unreachable(addr.to_owned()))?
            .collect();
        let stream = TcpStream::connect(&addrs[..]).map_err(|e| match e.kind() {
            io::ErrorKind::ConnectionRefused => TransportError::Unreachable(addr.to_owned()),
            _ => TransportError::Io(e.to_string()),
        })?;
        TcpConnection::new(stream).map_err(|e| TransportError::Io(e.to_string()))
    }

    fn take_buffered(&mut self) -> Option<Vec<u8>> {
        if self.pending.len() < 4 {
            return None;
        }
        let len = u32::from_be_bytes(self.pending[..4].try_into().unwrap()) as usize;
        if self.pending.len() < 4 + len {
            return None;
        }
        let msg = self.pending[4..4 + len].to_vec();
        self.pending.drain(..4 + len);
        Some(msg)
    }
}

impl Connection for TcpConnection {
    fn send(&mut self, payload: &[u8]) -> Result<(), TransportError> {
        if self.closed {
            return Err(TransportError::Closed);
        }
        let frame = encode_frame(payload)?;
        self.stream
            .write_all(&frame)
            .map_err(|_| TransportError::Closed)
    }

    fn recv(&mut self) -> Option<Vec<u8>> {
        if let Some(m) = self.take_buffered() {
            return Some(m);
        }
        let mut chain = io::Cursor::new(std::mem::take(&mut self.pending)).chain(&self.stream);
        read_frame(&mut chain).ok().flatten()
    }

    fn try_recv(&mut self) -> Polled {
        if let Some(m) = self.take_buffered() {
            return Polled::Message(m);
        }
        if self.stream.set_nonblocking(true).is_err() {
            return Polled::Closed;
        }
        let mut buf = [0u8; 64 * 1024];
        let mut eof = false;
        loop {
            match self.stream.read(&mut buf) {
                Ok(0) => {
                    eof = true;
                    break;
                }
                Ok(n) => self.pending.extend_from_slice(&buf[..n]),
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => break,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(_) => {
                    eof = true;
                    break;
                }
            }
        }
        let _ = self.stream.set_nonblocking(false);
        match self.take_buffered() {
            Some(m) => Polled::Message(m),
            None if eof => Polled::Closed,
            None => Polled::Empty,
        }
    }

    fn close(&mut self) {
        self.closed = true;
        let _ = self.stream.shutdown(std::net::Shutdown::Write);
    }
}

pub struct TcpFrameListener {
    inner: TcpListener,
}

impl TcpFrameListener {
    pub fn bind(addr: &str) -> io::Result<Self> {
        Ok(Self {
            inner: TcpListener::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> io::Result<String> {
        Ok(self.inner.local_addr()?.to_string())
    }

    pub fn accept(&self) -> io::Result<TcpConnection> {
        let (s, _) = self.inner.accept()?;
        TcpConnection::new(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loopback_fifo_and_close() {
        let net = LoopbackNetwork::new();
        let l = net.listen("ric");
        let mut a = net.connect("ric").unwrap();
        let mut b = l.accept().unwrap();
        for m in [&b"one"[..], b"", b"three"] {
            a.send(m).unwrap();
        }
        assert_eq!(b.recv().unwrap(), b"one");
        assert_eq!(b.recv().unwrap(), b"");
        a.close();
        assert_eq!(b.try_recv(), Polled::Message(b"three".to_vec()));
        assert_eq!(b.recv(), None);
        assert_eq!(b.try_recv(), Polled::Closed);
    }

    #[test]
    fn absent_and_dropped_listeners() {
        let net = LoopbackNetwork::new();
        assert!(matches!(
            net.connect("nowhere"),
            Err(TransportError::Unreachable(_))
        ));
        drop(net.listen("gone"));
        assert!(matches!(net.connect("gone"), Err(TransportError::Refused(_))));
    }

    #[test]
    fn oversize_rejected() {
        let (mut a, _b) = LoopbackConnection::pair();
        let big = vec![0u8; MAX_FRAME + 1];
        assert_eq!(a.send(&big), Err(TransportError::Oversize(MAX_FRAME + 1)));
        assert!(a.send(&big[..MAX_FRAME]).is_ok());
    }

    #[test]
    fn frame_layout_is_length_prefixed() {
        assert_eq!(encode_frame(b"ab").unwrap(), vec![0, 0, 0, 2, b'a', b'b']);
        let mut cur = io::Cursor::new(vec![0, 0, 0, 1, 7, 0, 0]);
        assert_eq!(read_frame(&mut cur).unwrap(), Some(vec![7]));
        assert!(read_frame(&mut cur).is_err());
    }

    #[test]
    fn tcp_roundtrip() {
        let l = TcpFrameListener::bind("127.0.0.1:0").unwrap();
        let addr = l.local_addr().unwrap();
        let h = std::thread::spawn(move || {
            let mut c = l.accept().unwrap();
            while let Some(m) = c.recv() {
                c.send(&m).unwrap();
            }
        });
        let mut c = TcpConnection::connect(&addr).unwrap();
        for i in 0..50u32 {
            c.send(&i.to_be_bytes().repeat(i as usize)).unwrap();
        }
        for i in 0..50u32 {
            assert_eq!(c.recv().unwrap(), i.to_be_bytes().repeat(i as usize));
        }
        c.close();
        assert_eq!(c.recv(), None);
        h.join().unwrap();
    }
}
