//! Deterministic discrete-event simulation of one petitioner/owner transfer.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vdtp_core::{
    Action, FailReason, FileStore, Owner, Packet, PacketType, Petitioner, ProtocolConfig,
};

use crate::channel::{transmit, ChannelParams, Transmission};
use crate::clock::EventQueue;
use crate::mobility::{DistanceProcess, MobilityProfile};

/// Interval between mobility updates, seconds.
pub const DISTANCE_TICK: f64 = 0.1;
/// Virtual time the distance process runs before a trial starts, so that
/// trials do not all begin at exactly the mean distance.
pub const MOBILITY_WARMUP: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Petitioner,
    Owner,
}

impl Node {
    pub fn as_str(self) -> &'static str {
        match self {
            Node::Petitioner => "petitioner",
            Node::Owner => "owner",
        }
    }

    pub fn peer(self) -> Node {
        match self {
            Node::Petitioner => Node::Owner,
            Node::Owner => Node::Petitioner,
        }
    }
}

/// What happens to datagrams between the two nodes.
pub trait Link {
    /// Arrival times of the copies of a datagram sent at `now`; an empty
    /// vector means it was lost.
    fn send(&mut self, from: Node, packet: &Packet, wire_len: usize, now: f64) -> Vec<f64>;

    /// Period of [`Link::tick`], if the link evolves over time.
    fn tick_interval(&self) -> Option<f64> {
        None
    }

    fn tick(&mut self, _now: f64) {}

    /// Current inter-node distance in meters, for tracing.
    fn distance(&self) -> f64 {
        0.0
    }
}

/// Two moving vehicles sharing a lossy radio channel.
///
/// Mobility and loss draws share one stream seeded with
/// `seed ⊕ params.rng_seed`.
#[derive(Debug, Clone)]
pub struct VehicularLink {
    params: ChannelParams,
    mobility: DistanceProcess,
    rng: ChaCha8Rng,
}

impl VehicularLink {
    pub fn new(params: ChannelParams, profile: MobilityProfile, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ params.rng_seed);
        let mut mobility = DistanceProcess::new(profile, &mut rng);
        let warmup_steps = (MOBILITY_WARMUP / DISTANCE_TICK).round() as usize;
        for _ in 0..warmup_steps {
            mobility.step(DISTANCE_TICK, &mut rng);
        }
        Self {
            params,
            mobility,
            rng,
        }
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }
}

impl Link for VehicularLink {
    fn send(&mut self, _from: Node, _packet: &Packet, wire_len: usize, now: f64) -> Vec<f64> {
        match transmit(
            wire_len,
            self.mobility.distance(),
            &self.params,
            &mut self.rng,
            now,
        ) {
            Transmission::Delivered { arrival } => vec![arrival],
            Transmission::Dropped => Vec::new(),
        }
    }

    fn tick_interval(&self) -> Option<f64> {
        Some(DISTANCE_TICK)
    }

    fn tick(&mut self, _now: f64) {
        self.mobility.step(DISTANCE_TICK, &mut self.rng);
    }

    fn distance(&self) -> f64 {
        self.mobility.distance()
    }
}

/// Lossless link with only serialization and processing delay.
#[derive(Debug, Clone)]
pub struct IdealLink {
    pub params: ChannelParams,
    pub distance: f64,
}

impl Link for IdealLink {
    fn send(&mut self, _from: Node, _packet: &Packet, wire_len: usize, now: f64) -> Vec<f64> {
        vec![
            now + self.params.serialization_delay(wire_len)
                + self.distance / crate::channel::PROPAGATION_SPEED
                + self.params.processing_delay,
        ]
    }

    fn distance(&self) -> f64 {
        self.distance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrialOutcome {
    Complete,
    Refused,
    NotFound,
    Corrupt,
    /// The time bound passed before the petitioner finished.
    Incomplete,
}

impl TrialOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Complete => "complete",
            TrialOutcome::Refused => "refused",
            TrialOutcome::NotFound => "not-found",
            TrialOutcome::Corrupt => "corrupt",
            TrialOutcome::Incomplete => "incomplete",
        }
    }

    pub const ALL: [TrialOutcome; 5] = [
        TrialOutcome::Complete,
        TrialOutcome::Refused,
        TrialOutcome::NotFound,
        TrialOutcome::Corrupt,
        TrialOutcome::Incomplete,
    ];
}

impl std::fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TrialOutcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| format!("unknown trial outcome {s:?}"))
    }
}

impl From<FailReason> for TrialOutcome {
    fn from(r: FailReason) -> Self {
        match r {
            FailReason::Refused => TrialOutcome::Refused,
            FailReason::FileNotFound => TrialOutcome::NotFound,
            FailReason::Corrupt => TrialOutcome::Corrupt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Send,
    Deliver,
    Drop,
    Timeout,
    Complete,
    Fail,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Send => "send",
            TraceEvent::Deliver => "deliver",
            TraceEvent::Drop => "drop",
            TraceEvent::Timeout => "timeout",
            TraceEvent::Complete => "complete",
            TraceEvent::Fail => "fail",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub event: TraceEvent,
    pub node: Node,
    pub packet_type: Option<PacketType>,
    pub transfer_id: u32,
    pub chunk_index: Option<u32>,
    pub size_bytes: usize,
    pub distance: f64,
    pub outcome: Option<TrialOutcome>,
}

pub const TRACE_HEADER: &str =
    "time_s,event,node,packet_type,transfer_id,chunk_index,size_bytes,distance_m,outcome";

impl TraceRecord {
    pub fn write_line(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{:.9},{},{},{},{},{},{},{:.3},{}",
            self.time,
            self.event.as_str(),
            self.node.as_str(),
            self.packet_type.map_or("", PacketType::as_str),
            self.transfer_id,
            self.chunk_index.map(|c| c.to_string()).unwrap_or_default(),
            self.size_bytes,
            self.distance,
            self.outcome.map_or("", TrialOutcome::as_str),
        );
    }
}

/// Serializes a trace, header first, one record per line.
pub fn trace_to_string(trace: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (trace.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        r.write_line(&mut out);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub packets_sent: u64,
    pub packets_delivered: u64,
    pub lost_packets: u64,
    pub lost_bytes: u64,
    pub bytes_sent: u64,
    pub timeouts: u64,
    /// Indexed by `PacketType as usize - 1`.
    pub sent_by_type: [u64; 5],
}

impl LinkStats {
    pub fn sent_of(&self, t: PacketType) -> u64 {
        self.sent_by_type[t as usize - 1]
    }
}

pub struct Scenario<S, L> {
    pub config: ProtocolConfig,
    pub store: S,
    pub file_name: String,
    pub link: L,
    /// Virtual-time bound, seconds.
    pub until: f64,
    pub record_trace: bool,
}

#[derive(Debug)]
pub struct SimReport {
    pub outcome: TrialOutcome,
    /// Time from the first FIRQ to the terminal action.
    pub elapsed: f64,
    pub file_bytes: Option<Vec<u8>>,
    pub stats: LinkStats,
    pub trace: Vec<TraceRecord>,
}

enum Event {
    Deliver {
        to: Node,
        packet: Packet,
        wire_len: usize,
    },
    Timer {
        deadline: f64,
    },
    Tick,
}

const TRANSFER_ID: u32 = 1;

struct Runner<L> {
    link: L,
    queue: EventQueue<Event>,
    stats: LinkStats,
    trace: Option<Vec<TraceRecord>>,
    terminal: Option<(TrialOutcome, f64, Option<Vec<u8>>)>,
}

impl<L: Link> Runner<L> {
    fn record(&mut self, rec: impl FnOnce(f64) -> TraceRecord) {
        let d = self.link.distance();
        if let Some(trace) = self.trace.as_mut() {
            trace.push(rec(d));
        }
    }

    fn apply(&mut self, node: Node, actions: Vec<Action<Node>>, now: f64) {
        for action in actions {
            match action {
                Action::Send { packet, peer } => {
                    let wire_len = packet.encoded_len();
                    let ptype = packet.packet_type();
                    self.stats.packets_sent += 1;
                    self.stats.bytes_sent += wire_len as u64;
                    self.stats.sent_by_type[ptype as usize - 1] += 1;
                    let arrivals = self.link.send(node, &packet, wire_len, now);
                    let event = if arrivals.is_empty() {
                        self.stats.lost_packets += 1;
                        self.stats.lost_bytes += wire_len as u64;
                        TraceEvent::Drop
                    } else {
                        TraceEvent::Send
                    };
                    self.record(|distance| TraceRecord {
                        time: now,
                        event,
                        node,
                        packet_type: Some(ptype),
                        transfer_id: packet.transfer_id(),
                        chunk_index: packet.chunk_index(),
                        size_bytes: wire_len,
                        distance,
                        outcome: None,
                    });
                    let copies = arrivals.len();
                    let mut packet = Some(packet);
                    for (i, at) in arrivals.into_iter().enumerate() {
                        let packet = if i + 1 == copies {
                            packet.take().expect("last copy")
                        } else {
                            packet.clone().expect("more copies")
                        };
                        self.queue.schedule(
                            at,
                            Event::Deliver {
                                to: peer,
                                packet,
                                wire_len,
                            },
                        );
                    }
                }
                Action::ArmTimer { deadline } => {
                    self.queue.schedule(deadline, Event::Timer { deadline });
                }
                Action::Complete { file_bytes } => {
                    self.finish(node, TrialOutcome::Complete, now, Some(file_bytes));
                }
                Action::Fail { reason } => {
                    self.finish(node, reason.into(), now, None);
                }
            }
        }
    }

    fn finish(&mut self, node: Node, outcome: TrialOutcome, now: f64, bytes: Option<Vec<u8>>) {
        let event = if outcome == TrialOutcome::Complete {
            TraceEvent::Complete
        } else {
            TraceEvent::Fail
        };
        self.record(|distance| TraceRecord {
            time: now,
            event,
            node,
            packet_type: None,
            transfer_id: TRANSFER_ID,
            chunk_index: None,
            size_bytes: bytes.as_ref().map_or(0, Vec::len),
            distance,
            outcome: Some(outcome),
        });
        self.terminal = Some((outcome, now, bytes));
    }
}

/// Runs one transfer to completion, refusal, or the time bound.
///
/// The petitioner starts at virtual time 0. After it reaches a terminal
/// state, datagrams still in flight are delivered (so a best-effort ABORT
/// reaches the owner) and the run ends.
pub fn sim_run<S: FileStore, L: Link>(scenario: Scenario<S, L>) -> SimReport {
    let Scenario {
        config,
        store,
        file_name,
        link,
        until,
        record_trace,
    } = scenario;
    let mut owner: Owner<Node, S> = Owner::new(store, config.owner_idle_timeout());
    let mut runner = Runner {
        link,
        queue: EventQueue::new(),
        stats: LinkStats::default(),
        trace: record_trace.then(Vec::new),
        terminal: None,
    };
    let tick = runner.link.tick_interval();
    if let Some(dt) = tick {
        runner.queue.schedule(dt, Event::Tick);
    }
    let (mut pet, actions) = Petitioner::with_id(config, TRANSFER_ID, file_name, Node::Owner, 0.0);
    runner.apply(Node::Petitioner, actions, 0.0);

    let mut timed_out = false;
    while let Some(next) = runner.queue.peek_time() {
        if next > until {
            timed_out = runner.terminal.is_none();
            break;
        }
        let (now, event) = runner.queue.pop().expect("peeked");
        match event {
            Event::Tick => {
                runner.link.tick(now);
                if let Some(dt) = tick {
                    if runner.terminal.is_none() {
                        runner.queue.schedule(now + dt, Event::Tick);
                    }
                }
            }
            Event::Timer { deadline } => {
                if pet.deadline() == Some(deadline) && !pet.is_terminal() {
                    runner.stats.timeouts += 1;
                    let tid = pet.transfer_id();
                    runner.record(|distance| TraceRecord {
                        time: now,
                        event: TraceEvent::Timeout,
                        node: Node::Petitioner,
                        packet_type: None,
                        transfer_id: tid,
                        chunk_index: None,
                        size_bytes: 0,
                        distance,
                        outcome: None,
                    });
                    let actions = pet.on_timeout(now);
                    runner.apply(Node::Petitioner, actions, now);
                }
            }
            Event::Deliver {
                to,
                packet,
                wire_len,
            } => {
                runner.stats.packets_delivered += 1;
                runner.record(|distance| TraceRecord {
                    time: now,
                    event: TraceEvent::Deliver,
                    node: to,
                    packet_type: Some(packet.packet_type()),
                    transfer_id: packet.transfer_id(),
                    chunk_index: packet.chunk_index(),
                    size_bytes: wire_len,
                    distance,
                    outcome: None,
                });
                let actions = match to {
                    Node::Owner => {
                        owner.expire_idle(now);
                        owner.on_packet(&packet, &Node::Petitioner, now)
                    }
                    Node::Petitioner => pet.on_packet(&packet, now),
                };
                runner.apply(to, actions, now);
            }
        }
        if runner.terminal.is_some() {
            runner.queue.retain(|e| matches!(e, Event::Deliver { .. }));
        }
    }

    let (outcome, elapsed, file_bytes) = match runner.terminal.take() {
        Some(t) => t,
        None => {
            debug_assert!(timed_out || runner.queue.is_empty());
            (TrialOutcome::Incomplete, until, None)
        }
    };
    SimReport {
        outcome,
        elapsed,
        file_bytes,
        stats: runner.stats,
        trace: runner.trace.unwrap_or_default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vdtp_core::{preset, MemoryStore};

    fn store(len: usize) -> MemoryStore {
        MemoryStore::new().with_file("f", (0..len).map(|i| (i % 251) as u8).collect::<Vec<_>>())
    }

    #[test]
    fn ideal_link_completes_with_expected_timing() {
        let params = ChannelParams {
            processing_delay: 0.0,
            ..ChannelParams::default()
        };
        let report = sim_run(Scenario {
            config: preset("EXPERTS").unwrap(),
            store: store(1_000_000),
            file_name: "f".into(),
            link: IdealLink {
                params: params.clone(),
                distance: 0.0,
            },
            until: 600.0,
            record_trace: false,
        });
        assert_eq!(report.outcome, TrialOutcome::Complete);
        assert_eq!(report.stats.lost_packets, 0);
        // every byte of every datagram is serialized once
        let expected = params.serialization_delay(report.stats.bytes_sent as usize);
        assert!(
            (report.elapsed - expected).abs() < 1e-9,
            "{} vs {}",
            report.elapsed,
            expected
        );
        assert_eq!(report.stats.sent_of(PacketType::Drq), 40);
        assert_eq!(report.stats.sent_of(PacketType::Drp), 40);
    }

    #[test]
    fn missing_file_is_reported() {
        let report = sim_run(Scenario {
            config: preset("SA").unwrap(),
            store: store(10),
            file_name: "other".into(),
            link: IdealLink {
                params: ChannelParams::default(),
                distance: 10.0,
            },
            until: 600.0,
            record_trace: true,
        });
        assert_eq!(report.outcome, TrialOutcome::NotFound);
        assert_eq!(
            report.trace.last().unwrap().outcome,
            Some(TrialOutcome::NotFound)
        );
    }

    #[test]
    fn time_bound_yields_incomplete() {
        struct Blackhole;
        impl Link for Blackhole {
            fn send(&mut self, _: Node, _: &Packet, _: usize, _: f64) -> Vec<f64> {
                Vec::new()
            }
        }
        let report = sim_run(Scenario {
            config: preset("EXPERTS").unwrap(),
            store: store(10),
            file_name: "f".into(),
            link: Blackhole,
            until: 20.0,
            record_trace: false,
        });
        assert_eq!(report.outcome, TrialOutcome::Incomplete);
        assert_eq!(report.stats.sent_of(PacketType::Firq), 3);
    }
}
