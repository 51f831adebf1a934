//! The serving side. One [`Owner`] multiplexes any number of transfers, each
//! keyed by `(peer, transfer_id)`. Replies are stateless with respect to
//! retransmission: a repeated FIRQ or DRQ is simply answered again.

use std::collections::HashMap;
use std::hash::Hash;

use crate::action::Action;
use crate::config::MAX_CHUNK_SIZE;
use crate::packet::{FirpStatus, Packet};
use crate::plan::TransferPlan;
use crate::store::FileStore;

#[derive(Debug, Clone)]
struct Session {
    file_name: String,
    plan: TransferPlan,
    last_activity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OwnerPhase {
    Idle,
    Serving,
}

#[derive(Debug)]
pub struct Owner<A, S> {
    store: S,
    idle_timeout: f64,
    sessions: HashMap<(A, u32), Session>,
}

impl<A, S> Owner<A, S>
where
    A: Clone + Eq + Hash,
    S: FileStore,
{
    /// `idle_timeout` is how long a transfer may stay silent before its
    /// state is dropped (normally `10 × retransmission_time`).
    pub fn new(store: S, idle_timeout: f64) -> Self {
        Self {
            store,
            idle_timeout,
            sessions: HashMap::new(),
        }
    }

    pub fn store(&self) -> &S {
        &self.store
    }

    pub fn active_transfers(&self) -> usize {
        self.sessions.len()
    }

    pub fn phase(&self, peer: &A, transfer_id: u32) -> OwnerPhase {
        if self.sessions.contains_key(&(peer.clone(), transfer_id)) {
            OwnerPhase::Serving
        } else {
            OwnerPhase::Idle
        }
    }

    pub fn on_packet(&mut self, packet: &Packet, from: &A, now: f64) -> Vec<Action<A>> {
        let mut actions = Vec::new();
        match packet {
            Packet::Firq {
                transfer_id,
                requested_chunk_size,
                file_name,
            } => {
                let key = (from.clone(), *transfer_id);
                let info = (1..=MAX_CHUNK_SIZE)
                    .contains(requested_chunk_size)
                    .then(|| self.store.info(file_name))
                    .flatten();
                let plan = info.and_then(|i| TransferPlan::checked(i.size, *requested_chunk_size));
                let reply = match (info, plan) {
                    (Some(info), Some(plan)) => {
                        self.sessions.insert(
                            key,
                            Session {
                                file_name: file_name.clone(),
                                plan,
                                last_activity: now,
                            },
                        );
                        Packet::Firp {
                            transfer_id: *transfer_id,
                            status: FirpStatus::Ok,
                            file_size: info.size,
                            file_crc32: info.crc32,
                        }
                    }
                    _ => {
                        self.sessions.remove(&key);
                        Packet::Firp {
                            transfer_id: *transfer_id,
                            status: FirpStatus::NotFound,
                            file_size: 0,
                            file_crc32: 0,
                        }
                    }
                };
                actions.push(Action::Send {
                    packet: reply,
                    peer: from.clone(),
                });
            }
            Packet::Drq {
                transfer_id,
                chunk_index,
            } => {
                let Some(session) = self.sessions.get_mut(&(from.clone(), *transfer_id)) else {
                    return actions;
                };
                let Some(range) = session.plan.chunk_range(*chunk_index) else {
                    return actions;
                };
                let len = (range.end - range.start) as usize;
                let Some(data) = self.store.read(&session.file_name, range.start, len) else {
                    return actions;
                };
                session.last_activity = now;
                actions.push(Action::Send {
                    packet: Packet::Drp {
                        transfer_id: *transfer_id,
                        chunk_index: *chunk_index,
                        data,
                    },
                    peer: from.clone(),
                });
            }
            Packet::Abort { transfer_id, .. } => {
                self.sessions.remove(&(from.clone(), *transfer_id));
            }
            Packet::Firp { .. } | Packet::Drp { .. } => {}
        }
        actions
    }

    /// Drops every transfer silent for at least the idle timeout. Returns how
    /// many were released.
    pub fn expire_idle(&mut self, now: f64) -> usize {
        let before = self.sessions.len();
        let timeout = self.idle_timeout;
        self.sessions.retain(|_, s| now - s.last_activity < timeout);
        before - self.sessions.len()
    }

    /// Earliest moment at which [`Owner::expire_idle`] would release something.
    pub fn next_expiry(&self) -> Option<f64> {
        self.sessions
            .values()
            .map(|s| s.last_activity + self.idle_timeout)
            .min_by(f64::total_cmp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::AbortReason;
    use crate::store::MemoryStore;

    fn owner() -> (Owner<u8, MemoryStore>, Vec<u8>) {
        let data: Vec<u8> = (0..1_000_000u32).map(|i| (i % 253) as u8).collect();
        let store = MemoryStore::new().with_file("f.bin", data.clone());
        (Owner::new(store, 80.0), data)
    }

    fn firq(id: u32, name: &str, chunk: u32) -> Packet {
        Packet::Firq {
            transfer_id: id,
            requested_chunk_size: chunk,
            file_name: name.into(),
        }
    }

    fn sent(actions: Vec<Action<u8>>) -> Packet {
        match actions.as_slice() {
            [Action::Send { packet, peer: 1 }] => packet.clone(),
            other => panic!("expected one send, got {other:?}"),
        }
    }

    #[test]
    fn answers_firq_and_drq() {
        let (mut o, data) = owner();
        let reply = sent(o.on_packet(&firq(5, "f.bin", 25_600), &1, 0.0));
        assert_eq!(
            reply,
            Packet::Firp {
                transfer_id: 5,
                status: FirpStatus::Ok,
                file_size: 1_000_000,
                file_crc32: crc32fast::hash(&data)
            }
        );
        assert_eq!(o.phase(&1, 5), OwnerPhase::Serving);

        let drq = Packet::Drq {
            transfer_id: 5,
            chunk_index: 40,
        };
        let Packet::Drp { data: chunk, .. } = sent(o.on_packet(&drq, &1, 0.1)) else {
            panic!()
        };
        assert_eq!(chunk.len(), 1_600);
        assert_eq!(&chunk[..], &data[998_400..]);

        // a retransmitted DRQ is answered again
        assert!(matches!(
            sent(o.on_packet(&drq, &1, 0.2)),
            Packet::Drp {
                chunk_index: 40,
                ..
            }
        ));
    }

    #[test]
    fn missing_file_and_bad_requests() {
        let (mut o, _) = owner();
        let reply = sent(o.on_packet(&firq(5, "nope", 25_600), &1, 0.0));
        assert!(matches!(
            reply,
            Packet::Firp {
                status: FirpStatus::NotFound,
                ..
            }
        ));
        assert_eq!(o.active_transfers(), 0);

        let reply = sent(o.on_packet(&firq(6, "f.bin", 0), &1, 0.0));
        assert!(matches!(
            reply,
            Packet::Firp {
                status: FirpStatus::NotFound,
                ..
            }
        ));

        o.on_packet(&firq(7, "f.bin", 25_600), &1, 0.0);
        let drq = |id, idx| Packet::Drq {
            transfer_id: id,
            chunk_index: idx,
        };
        assert!(o.on_packet(&drq(99, 1), &1, 0.0).is_empty());
        assert!(o.on_packet(&drq(7, 41), &1, 0.0).is_empty());
        // same id from another peer is a different transfer
        assert!(o.on_packet(&drq(7, 1), &2, 0.0).is_empty());
    }

    #[test]
    fn abort_and_idle_release_state() {
        let (mut o, _) = owner();
        o.on_packet(&firq(1, "f.bin", 25_600), &1, 0.0);
        o.on_packet(&firq(2, "f.bin", 25_600), &1, 50.0);
        assert_eq!(o.active_transfers(), 2);
        assert_eq!(o.next_expiry(), Some(80.0));

        let abort = Packet::Abort {
            transfer_id: 2,
            reason: AbortReason::Refused,
        };
        assert!(o.on_packet(&abort, &1, 60.0).is_empty());
        assert_eq!(o.phase(&1, 2), OwnerPhase::Idle);

        assert_eq!(o.expire_idle(79.9), 0);
        assert_eq!(o.expire_idle(80.0), 1);
        assert_eq!(o.active_transfers(), 0);
        assert_eq!(o.next_expiry(), None);
    }
}
