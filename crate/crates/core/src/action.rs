use std::fmt;

use crate::packet::Packet;

/// Side effect requested by a state-machine step. The driver performs them
/// in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Action<A> {
    Send {
        packet: Packet,
        peer: A,
    },
    /// Replaces any previously armed timer of the same machine.
    ArmTimer {
        deadline: f64,
    },
    Complete {
        file_bytes: Vec<u8>,
    },
    Fail {
        reason: FailReason,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailReason {
    /// A single request exhausted its retransmission budget.
    Refused,
    FileNotFound,
    /// Reassembled bytes did not match the checksum announced in the FIRP.
    Corrupt,
}

impl FailReason {
    pub fn as_str(self) -> &'static str {
        match self {
            FailReason::Refused => "refused",
            FailReason::FileNotFound => "file-not-found",
            FailReason::Corrupt => "corrupt",
        }
    }
}

impl fmt::Display for FailReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl<A> Action<A> {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Action::Complete { .. } | Action::Fail { .. })
    }
}
