//! Vehicular Data Transfer Protocol.
//!
//! An application-layer, stop-and-wait file transfer protocol over datagrams.
//! A *petitioner* downloads a file from an *owner* with four packet kinds:
//! FIRQ/FIRP exchange file metadata, DRQ/DRP move one chunk at a time.
//! Lost requests are retransmitted after `retransmission_time`; after
//! `max_attempts` retransmissions of the same request the transfer is refused.
//!
//! Both roles are pure state machines: feed them packets and timer expiries,
//! and carry out the [`Action`]s they return. They never touch a socket or a
//! clock, so the same code runs over UDP and inside a virtual-time simulator.

pub mod action;
pub mod config;
pub mod owner;
pub mod packet;
pub mod petitioner;
pub mod plan;
pub mod store;

pub use action::{Action, FailReason};
pub use config::{preset, presets, ConfigError, ProtocolConfig, MAX_CHUNK_SIZE, PRESETS};
pub use owner::{Owner, OwnerPhase};
pub use packet::{
    AbortReason, DecodeError, EncodeError, FirpStatus, Packet, PacketType, DRP_OVERHEAD,
    MAX_DATAGRAM,
};
pub use petitioner::{Petitioner, PetitionerPhase, TransferIds};
pub use plan::TransferPlan;
pub use store::{DirStore, FileInfo, FileStore, MemoryStore};
