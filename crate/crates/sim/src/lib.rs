//! Transports for VDTP.
//!
//! * [`endpoint`]: the datagram endpoint contract with real UDP, in-memory
//!   and loss-injecting implementations, plus blocking drivers that run the
//!   protocol state machines over any of them.
//! * [`sim`]: a single-threaded discrete-event simulator in virtual time with
//!   a vehicular channel ([`channel`]) and distance process ([`mobility`]).

pub mod channel;
pub mod clock;
pub mod endpoint;
pub mod mobility;
pub mod sim;

pub use channel::{loss_probability, transmit, ChannelError, ChannelParams, Transmission};
pub use clock::EventQueue;
pub use endpoint::{
    fetch, serve, Datagram, DatagramEndpoint, Fate, FaultPolicy, FetchReport, LossyEndpoint,
    MemoryEndpoint, RandomFaults, ServeStats, UdpEndpoint,
};
pub use mobility::{DistanceProcess, MobilityError, MobilityProfile};
pub use sim::{
    sim_run, trace_to_string, IdealLink, Link, LinkStats, Node, Scenario, SimReport, TraceEvent,
    TraceRecord, TrialOutcome, VehicularLink, DISTANCE_TICK, TRACE_HEADER,
};
