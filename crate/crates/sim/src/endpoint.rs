//! Datagram endpoints and the blocking drivers that run VDTP over them.
//!
//! An endpoint delivers whole datagrams or nothing. Loss, duplication and
//! reordering are all allowed, which is exactly what the protocol state
//! machines are built to absorb.

use std::collections::VecDeque;
use std::fmt::Debug;
use std::hash::Hash;
use std::io;
use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vdtp_core::{
    Action, FileStore, Owner, Packet, PacketType, Petitioner, ProtocolConfig, TransferIds,
    MAX_DATAGRAM,
};

use crate::sim::TrialOutcome;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Datagram<A> {
    pub bytes: Vec<u8>,
    pub peer: A,
    pub arrival: Instant,
}

/// Best-effort datagram socket.
pub trait DatagramEndpoint {
    type Addr: Clone + Eq + Hash + Debug;

    fn local_addr(&self) -> io::Result<Self::Addr>;

    /// Queues one datagram for `peer`. Returns without waiting for delivery.
    fn send_to(&mut self, bytes: &[u8], peer: &Self::Addr) -> io::Result<()>;

    /// Waits up to `timeout` for a datagram. `Ok(None)` means the deadline
    /// passed with nothing to read.
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Datagram<Self::Addr>>>;
}

fn oversize(len: usize) -> io::Error {
    io::Error::new(
        io::ErrorKind::InvalidInput,
        format!("datagram of {len} bytes exceeds the {MAX_DATAGRAM}-byte UDP payload limit"),
    )
}

/// A real UDP socket.
#[derive(Debug)]
pub struct UdpEndpoint {
    socket: UdpSocket,
    buf: Box<[u8]>,
}

impl UdpEndpoint {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Self {
            socket: UdpSocket::bind(addr)?,
            buf: vec![0u8; 65_536].into_boxed_slice(),
        })
    }

    pub fn socket(&self) -> &UdpSocket {
        &self.socket
    }
}

impl DatagramEndpoint for UdpEndpoint {
    type Addr = SocketAddr;

    fn local_addr(&self) -> io::Result<SocketAddr> {
        self.socket.local_addr()
    }

    fn send_to(&mut self, bytes: &[u8], peer: &SocketAddr) -> io::Result<()> {
        if bytes.len() > MAX_DATAGRAM {
            return Err(oversize(bytes.len()));
        }
        self.socket.send_to(bytes, peer).map(|_| ())
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Datagram<SocketAddr>>> {
        let deadline = Instant::now() + timeout;
        loop {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                return Ok(None);
            }
            // a zero read timeout would mean "block forever"
            self.socket
                .set_read_timeout(Some(left.max(Duration::from_micros(100))))?;
            match self.socket.recv_from(&mut self.buf) {
                Ok((n, peer)) => {
                    return Ok(Some(Datagram {
                        bytes: self.buf[..n].to_vec(),
                        peer,
                        arrival: Instant::now(),
                    }))
                }
                Err(e)
                    if matches!(
                        e.kind(),
                        io::ErrorKind::WouldBlock
                            | io::ErrorKind::TimedOut
                            | io::ErrorKind::Interrupted
                            // ICMP unreachable from an earlier send
                            | io::ErrorKind::ConnectionRefused
                            | io::ErrorKind::ConnectionReset
                    ) => {}
                Err(e) => return Err(e),
            }
        }
    }
}

/// One side of an in-process datagram pipe.
#[derive(Debug)]
pub struct MemoryEndpoint {
    addr: u8,
    tx: Sender<(Vec<u8>, Instant)>,
    rx: Receiver<(Vec<u8>, Instant)>,
}

impl MemoryEndpoint {
    /// Two connected endpoints with addresses 0 and 1.
    pub fn pair() -> (Self, Self) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        (
            Self {
                addr: 0,
                tx: tx_a,
                rx: rx_a,
            },
            Self {
                addr: 1,
                tx: tx_b,
                rx: rx_b,
            },
        )
    }
}

impl DatagramEndpoint for MemoryEndpoint {
    type Addr = u8;

    fn local_addr(&self) -> io::Result<u8> {
        Ok(self.addr)
    }

    fn send_to(&mut self, bytes: &[u8], peer: &u8) -> io::Result<()> {
        if bytes.len() > MAX_DATAGRAM {
            return Err(oversize(bytes.len()));
        }
        if *peer == 1 - self.addr {
            // a vanished peer is just loss
            let _ = self.tx.send((bytes.to_vec(), Instant::now()));
        }
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Datagram<u8>>> {
        match self.rx.recv_timeout(timeout) {
            Ok((bytes, _)) => Ok(Some(Datagram {
                bytes,
                peer: 1 - self.addr,
                arrival: Instant::now(),
            })),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => {
                std::thread::sleep(timeout);
                Ok(None)
            }
        }
    }
}

/// What a fault injector does with one outgoing datagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Deliver,
    Drop,
    Duplicate,
    /// Hold back until after the next datagram is sent.
    Delay,
}

pub trait FaultPolicy {
    fn fate(&mut self, bytes: &[u8]) -> Fate;
}

impl<F: FnMut(&[u8]) -> Fate> FaultPolicy for F {
    fn fate(&mut self, bytes: &[u8]) -> Fate {
        self(bytes)
    }
}

/// Independent per-datagram faults from a seeded stream.
#[derive(Debug, Clone)]
pub struct RandomFaults {
    pub drop: f64,
    pub duplicate: f64,
    pub delay: f64,
    rng: ChaCha8Rng,
}

impl RandomFaults {
    pub fn new(drop: f64, duplicate: f64, delay: f64, seed: u64) -> Self {
        Self {
            drop,
            duplicate,
            delay,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl FaultPolicy for RandomFaults {
    fn fate(&mut self, _bytes: &[u8]) -> Fate {
        let u: f64 = self.rng.random();
        if u < self.drop {
            Fate::Drop
        } else if u < self.drop + self.duplicate {
            Fate::Duplicate
        } else if u < self.drop + self.duplicate + self.delay {
            Fate::Delay
        } else {
            Fate::Deliver
        }
    }
}

/// Wraps an endpoint and applies a [`FaultPolicy`] to everything it sends.
pub struct LossyEndpoint<E: DatagramEndpoint, P> {
    inner: E,
    policy: P,
    held: VecDeque<(Vec<u8>, E::Addr)>,
    dropped: u64,
}

impl<E: DatagramEndpoint, P: FaultPolicy> LossyEndpoint<E, P> {
    pub fn new(inner: E, policy: P) -> Self {
        Self {
            inner,
            policy,
            held: VecDeque::new(),
            dropped: 0,
        }
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: DatagramEndpoint, P: FaultPolicy> DatagramEndpoint for LossyEndpoint<E, P> {
    type Addr = E::Addr;

    fn local_addr(&self) -> io::Result<E::Addr> {
        self.inner.local_addr()
    }

    fn send_to(&mut self, bytes: &[u8], peer: &E::Addr) -> io::Result<()> {
        if bytes.len() > MAX_DATAGRAM {
            return Err(oversize(bytes.len()));
        }
        let released: Vec<_> = self.held.drain(..).collect();
        match self.policy.fate(bytes) {
            Fate::Deliver => self.inner.send_to(bytes, peer)?,
            Fate::Drop => self.dropped += 1,
            Fate::Duplicate => {
                self.inner.send_to(bytes, peer)?;
                self.inner.send_to(bytes, peer)?;
            }
            Fate::Delay => self.held.push_back((bytes.to_vec(), peer.clone())),
        }
        for (b, p) in released {
            self.inner.send_to(&b, &p)?;
        }
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> io::Result<Option<Datagram<E::Addr>>> {
        self.inner.recv(timeout)
    }
}

impl<E: DatagramEndpoint, P> Debug for LossyEndpoint<E, P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LossyEndpoint")
            .field("held", &self.held.len())
            .field("dropped", &self.dropped)
            .finish_non_exhaustive()
    }
}

#[derive(Debug)]
pub struct FetchReport {
    pub outcome: TrialOutcome,
    pub file_bytes: Option<Vec<u8>>,
    /// Wall time from the first FIRQ to the terminal action, seconds.
    pub elapsed: f64,
    /// Requests whose timer expired; each one stands for a lost request or
    /// reply.
    pub lost_packets: u64,
    pub requests_sent: u64,
    /// Requests of each type put on the wire, indexed by `PacketType as usize - 1`.
    pub sent_by_type: [u64; 5],
}

impl FetchReport {
    pub fn goodput_kbs(&self) -> Option<f64> {
        let bytes = self.file_bytes.as_ref()?;
        (self.elapsed > 0.0).then(|| bytes.len() as f64 / self.elapsed / 1_000.0)
    }
}

fn send_packet<E: DatagramEndpoint>(
    ep: &mut E,
    packet: &Packet,
    peer: &E::Addr,
    scratch: &mut Vec<u8>,
) -> io::Result<()> {
    scratch.clear();
    packet
        .encode_into(scratch)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    ep.send_to(scratch, peer)
}

/// Downloads `file_name` from `peer`, blocking until the transfer ends.
pub fn fetch<E: DatagramEndpoint>(
    ep: &mut E,
    peer: E::Addr,
    file_name: &str,
    config: ProtocolConfig,
    ids: &mut TransferIds,
) -> io::Result<FetchReport> {
    let start = Instant::now();
    let now = || start.elapsed().as_secs_f64();
    let mut scratch = Vec::with_capacity(MAX_DATAGRAM);
    let (mut pet, mut actions) = Petitioner::start(config, ids, file_name, peer.clone(), 0.0);
    let mut report = FetchReport {
        outcome: TrialOutcome::Incomplete,
        file_bytes: None,
        elapsed: 0.0,
        lost_packets: 0,
        requests_sent: 0,
        sent_by_type: [0; 5],
    };
    loop {
        for action in actions.drain(..) {
            match action {
                Action::Send { packet, peer } => {
                    let t = packet.packet_type();
                    report.sent_by_type[t as usize - 1] += 1;
                    if matches!(t, PacketType::Firq | PacketType::Drq) {
                        report.requests_sent += 1;
                    }
                    send_packet(ep, &packet, &peer, &mut scratch)?;
                }
                Action::ArmTimer { .. } => {}
                Action::Complete { file_bytes } => {
                    report.outcome = TrialOutcome::Complete;
                    report.file_bytes = Some(file_bytes);
                    report.elapsed = now();
                }
                Action::Fail { reason } => {
                    report.outcome = reason.into();
                    report.elapsed = now();
                }
            }
        }
        if pet.is_terminal() {
            return Ok(report);
        }
        let deadline = pet
            .deadline()
            .expect("a live petitioner always has a timer");
        let t = now();
        if t >= deadline {
            report.lost_packets += 1;
            log::debug!(
                "timeout waiting for {:?}",
                pet.outstanding_request().map(|p| p.packet_type())
            );
            actions = pet.on_timeout(t);
            continue;
        }
        if let Some(dgram) = ep.recv(Duration::from_secs_f64(deadline - t))? {
            if dgram.peer != peer {
                continue;
            }
            match Packet::decode(&dgram.bytes) {
                Ok(packet) => actions = pet.on_packet(&packet, now()),
                Err(e) => log::debug!("ignoring malformed datagram: {e}"),
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServeStats {
    pub datagrams_received: u64,
    pub malformed: u64,
    pub replies_sent: u64,
    pub transfers_opened: u64,
    pub transfers_expired: u64,
}

/// How often [`serve`] looks at the shutdown flag while idle.
pub const SERVE_POLL: Duration = Duration::from_millis(100);

/// Answers requests until `shutdown` is set.
pub fn serve<E: DatagramEndpoint, S: FileStore>(
    ep: &mut E,
    owner: &mut Owner<E::Addr, S>,
    shutdown: &AtomicBool,
) -> io::Result<ServeStats> {
    let start = Instant::now();
    let mut stats = ServeStats::default();
    let mut scratch = Vec::with_capacity(MAX_DATAGRAM);
    while !shutdown.load(Ordering::Relaxed) {
        let received = ep.recv(SERVE_POLL)?;
        let now = start.elapsed().as_secs_f64();
        let expired = owner.expire_idle(now);
        if expired > 0 {
            log::info!("released {expired} idle transfer(s)");
            stats.transfers_expired += expired as u64;
        }
        let Some(dgram) = received else {
            continue;
        };
        stats.datagrams_received += 1;
        let packet = match Packet::decode(&dgram.bytes) {
            Ok(p) => p,
            Err(e) => {
                stats.malformed += 1;
                log::debug!("malformed datagram from {:?}: {e}", dgram.peer);
                continue;
            }
        };
        match &packet {
            Packet::Firq {
                transfer_id,
                file_name,
                requested_chunk_size,
            } => {
                stats.transfers_opened += 1;
                log::info!(
                    "{:?} transfer {transfer_id}: FIRQ {file_name:?} chunk {requested_chunk_size}",
                    dgram.peer
                );
            }
            Packet::Abort {
                transfer_id,
                reason,
            } => log::info!(
                "{:?} transfer {transfer_id}: aborted ({reason:?})",
                dgram.peer
            ),
            _ => {}
        }
        for action in owner.on_packet(&packet, &dgram.peer, now) {
            if let Action::Send { packet, peer } = action {
                match send_packet(ep, &packet, &peer, &mut scratch) {
                    Ok(()) => stats.replies_sent += 1,
                    // one failed reply is a lost datagram, not a dead server
                    Err(e) => log::warn!("send to {peer:?} failed: {e}"),
                }
            }
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn udp_loopback_delivers_whole_datagrams() {
        let mut a = UdpEndpoint::bind("127.0.0.1:0").unwrap();
        let mut b = UdpEndpoint::bind("127.0.0.1:0").unwrap();
        let b_addr = b.local_addr().unwrap();
        a.send_to(b"twelve bytes", &b_addr).unwrap();
        let got = b.recv(Duration::from_secs(2)).unwrap().unwrap();
        assert_eq!(got.bytes, b"twelve bytes");
        assert_eq!(got.peer, a.local_addr().unwrap());
    }

    #[test]
    fn udp_rejects_oversize() {
        let mut a = UdpEndpoint::bind("127.0.0.1:0").unwrap();
        let to = a.local_addr().unwrap();
        let err = a.send_to(&vec![0u8; MAX_DATAGRAM + 1], &to).unwrap_err();
        assert_eq!(err.kind(), io::ErrorKind::InvalidInput);
        a.send_to(&vec![0u8; MAX_DATAGRAM], &to).unwrap();
    }

    #[test]
    fn udp_deadline_is_not_an_error() {
        let mut a = UdpEndpoint::bind("127.0.0.1:0").unwrap();
        let t = Instant::now();
        assert!(a.recv(Duration::from_millis(10)).unwrap().is_none());
        assert!(t.elapsed() >= Duration::from_millis(10));
    }

    #[test]
    fn memory_pair_round_trip() {
        let (mut a, mut b) = MemoryEndpoint::pair();
        a.send_to(b"hi", &1).unwrap();
        let got = b.recv(Duration::from_millis(100)).unwrap().unwrap();
        assert_eq!((got.bytes.as_slice(), got.peer), (&b"hi"[..], 0));
        assert!(a.recv(Duration::from_millis(5)).unwrap().is_none());
    }

    #[test]
    fn delayed_datagram_is_reordered_behind_the_next() {
        let (a, mut b) = MemoryEndpoint::pair();
        let mut fates = [Fate::Delay, Fate::Deliver].into_iter();
        let mut a = LossyEndpoint::new(a, move |_: &[u8]| fates.next().unwrap_or(Fate::Deliver));
        a.send_to(b"first", &1).unwrap();
        a.send_to(b"second", &1).unwrap();
        let order: Vec<_> = (0..2)
            .map(|_| b.recv(Duration::from_millis(100)).unwrap().unwrap().bytes)
            .collect();
        assert_eq!(order, [b"second".to_vec(), b"first".to_vec()]);
    }
}
