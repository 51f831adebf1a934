//! The downloading side of a transfer.
//!
//! The petitioner asks for file metadata with a FIRQ, then pulls chunks one
//! at a time with DRQ(1), DRQ(2), ... until the last DRP arrives. Exactly one
//! request is outstanding at any moment. When its timer fires the request is
//! sent again, up to `max_attempts` times; one more expiry refuses the
//! transfer.

use crate::action::{Action, FailReason};
use crate::config::ProtocolConfig;
use crate::packet::{AbortReason, FirpStatus, Packet};
use crate::plan::TransferPlan;

/// Hands out transfer identifiers that do not repeat until the `u32` space
/// wraps.
#[derive(Debug, Clone)]
pub struct TransferIds {
    next: u32,
}

impl TransferIds {
    pub fn starting_at(first: u32) -> Self {
        Self { next: first }
    }

    pub fn next_id(&mut self) -> u32 {
        let id = self.next;
        self.next = self.next.wrapping_add(1);
        id
    }
}

impl Default for TransferIds {
    fn default() -> Self {
        Self::starting_at(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PetitionerPhase {
    AwaitingFirp,
    /// Waiting for the DRP carrying this 1-based chunk.
    AwaitingDrp(u32),
    Done,
    Failed(FailReason),
}

#[derive(Debug)]
pub struct Petitioner<A> {
    cfg: ProtocolConfig,
    transfer_id: u32,
    peer: A,
    file_name: String,
    phase: PetitionerPhase,
    plan: Option<TransferPlan>,
    expected_crc: u32,
    attempts_used: u32,
    deadline: Option<f64>,
    buffer: Vec<u8>,
    hasher: crc32fast::Hasher,
}

impl<A: Clone> Petitioner<A> {
    /// Opens a transfer: emits the FIRQ and arms the first timer.
    pub fn start(
        cfg: ProtocolConfig,
        ids: &mut TransferIds,
        file_name: impl Into<String>,
        peer: A,
        now: f64,
    ) -> (Self, Vec<Action<A>>) {
        Self::with_id(cfg, ids.next_id(), file_name, peer, now)
    }

    /// Same as [`Petitioner::start`] with a caller-chosen transfer id.
    pub fn with_id(
        cfg: ProtocolConfig,
        transfer_id: u32,
        file_name: impl Into<String>,
        peer: A,
        now: f64,
    ) -> (Self, Vec<Action<A>>) {
        let mut st = Self {
            cfg,
            transfer_id,
            peer,
            file_name: file_name.into(),
            phase: PetitionerPhase::AwaitingFirp,
            plan: None,
            expected_crc: 0,
            attempts_used: 0,
            deadline: None,
            buffer: Vec::new(),
            hasher: crc32fast::Hasher::new(),
        };
        let mut actions = Vec::with_capacity(2);
        st.send_outstanding(now, &mut actions);
        (st, actions)
    }

    pub fn transfer_id(&self) -> u32 {
        self.transfer_id
    }

    pub fn phase(&self) -> PetitionerPhase {
        self.phase
    }

    pub fn plan(&self) -> Option<&TransferPlan> {
        self.plan.as_ref()
    }

    pub fn attempts_used(&self) -> u32 {
        self.attempts_used
    }

    /// Deadline of the armed timer, `None` once terminal.
    pub fn deadline(&self) -> Option<f64> {
        self.deadline
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.cfg
    }

    pub fn is_terminal(&self) -> bool {
        matches!(
            self.phase,
            PetitionerPhase::Done | PetitionerPhase::Failed(_)
        )
    }

    /// The request currently waiting for a reply.
    pub fn outstanding_request(&self) -> Option<Packet> {
        match self.phase {
            PetitionerPhase::AwaitingFirp => Some(Packet::Firq {
                transfer_id: self.transfer_id,
                requested_chunk_size: self.cfg.chunk_size(),
                file_name: self.file_name.clone(),
            }),
            PetitionerPhase::AwaitingDrp(chunk_index) => Some(Packet::Drq {
                transfer_id: self.transfer_id,
                chunk_index,
            }),
            _ => None,
        }
    }

    /// Handles a packet from the owner. Anything that is not the reply to
    /// the outstanding request is ignored without changing state.
    pub fn on_packet(&mut self, packet: &Packet, now: f64) -> Vec<Action<A>> {
        let mut actions = Vec::new();
        if self.is_terminal() || packet.transfer_id() != self.transfer_id {
            return actions;
        }
        match (self.phase, packet) {
            (
                PetitionerPhase::AwaitingFirp,
                Packet::Firp {
                    status,
                    file_size,
                    file_crc32,
                    ..
                },
            ) => match status {
                FirpStatus::NotFound => self.fail(FailReason::FileNotFound, &mut actions),
                FirpStatus::Ok => {
                    let Some(plan) = TransferPlan::checked(*file_size, self.cfg.chunk_size())
                    else {
                        self.fail(FailReason::Corrupt, &mut actions);
                        return actions;
                    };
                    self.plan = Some(plan);
                    self.expected_crc = *file_crc32;
                    self.buffer
                        .reserve(plan.file_size.min(64 * 1024 * 1024) as usize);
                    if plan.n_chunks == 0 {
                        self.finish(&mut actions);
                    } else {
                        self.advance_to(1, now, &mut actions);
                    }
                }
            },
            (
                PetitionerPhase::AwaitingDrp(want),
                Packet::Drp {
                    chunk_index, data, ..
                },
            ) if *chunk_index == want => {
                let plan = self.plan.expect("plan exists while awaiting data");
                if plan.chunk_len(want) != Some(data.len() as u32) {
                    return actions;
                }
                self.buffer.extend_from_slice(data);
                self.hasher.update(data);
                if want == plan.n_chunks {
                    self.finish(&mut actions);
                } else {
                    self.advance_to(want + 1, now, &mut actions);
                }
            }
            _ => {}
        }
        actions
    }

    /// Handles expiry of the armed timer. Calls made before the current
    /// deadline (a timer that was since re-armed) are ignored.
    pub fn on_timeout(&mut self, now: f64) -> Vec<Action<A>> {
        let mut actions = Vec::new();
        match self.deadline {
            Some(deadline) if now >= deadline && !self.is_terminal() => {}
            _ => return actions,
        }
        if self.attempts_used < self.cfg.max_attempts() {
            self.attempts_used += 1;
            self.send_outstanding(now, &mut actions);
        } else {
            actions.push(Action::Send {
                packet: Packet::Abort {
                    transfer_id: self.transfer_id,
                    reason: AbortReason::Refused,
                },
                peer: self.peer.clone(),
            });
            self.fail(FailReason::Refused, &mut actions);
        }
        actions
    }

    fn advance_to(&mut self, chunk_index: u32, now: f64, actions: &mut Vec<Action<A>>) {
        self.phase = PetitionerPhase::AwaitingDrp(chunk_index);
        self.attempts_used = 0;
        self.send_outstanding(now, actions);
    }

    fn send_outstanding(&mut self, now: f64, actions: &mut Vec<Action<A>>) {
        let packet = self
            .outstanding_request()
            .expect("only called with a request outstanding");
        let deadline = now + self.cfg.retransmission_time();
        self.deadline = Some(deadline);
        actions.push(Action::Send {
            packet,
            peer: self.peer.clone(),
        });
        actions.push(Action::ArmTimer { deadline });
    }

    fn finish(&mut self, actions: &mut Vec<Action<A>>) {
        let crc = std::mem::take(&mut self.hasher).finalize();
        if crc != self.expected_crc {
            self.fail(FailReason::Corrupt, actions);
            return;
        }
        self.phase = PetitionerPhase::Done;
        self.deadline = None;
        actions.push(Action::Complete {
            file_bytes: std::mem::take(&mut self.buffer),
        });
    }

    fn fail(&mut self, reason: FailReason, actions: &mut Vec<Action<A>>) {
        self.phase = PetitionerPhase::Failed(reason);
        self.deadline = None;
        self.buffer = Vec::new();
        actions.push(Action::Fail { reason });
    }
}
