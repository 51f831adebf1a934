//! Protocol parameters governing a single transfer.

use thiserror::Error;

/// Largest chunk that still fits in one UDP datagram together with the DRP
/// header (65,507-byte payload limit).
pub const MAX_CHUNK_SIZE: u32 = 65_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("chunk_size must be in 1..={MAX_CHUNK_SIZE}, got {0}")]
    ChunkSize(u32),
    #[error("retransmission_time must be a positive finite number of seconds, got {0}")]
    RetransmissionTime(f64),
    #[error("max_attempts must be at least 1")]
    MaxAttempts,
}

/// The `(chunk_size, retransmission_time, max_attempts)` triple.
///
/// `max_attempts` bounds the number of *retransmissions* of one request, so a
/// request is put on the wire at most `1 + max_attempts` times before the
/// transfer is refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolConfig {
    chunk_size: u32,
    retransmission_time: f64,
    max_attempts: u32,
}

impl ProtocolConfig {
    pub fn new(
        chunk_size: u32,
        retransmission_time: f64,
        max_attempts: u32,
    ) -> Result<Self, ConfigError> {
        if chunk_size == 0 || chunk_size > MAX_CHUNK_SIZE {
            return Err(ConfigError::ChunkSize(chunk_size));
        }
        if !(retransmission_time.is_finite() && retransmission_time > 0.0) {
            return Err(ConfigError::RetransmissionTime(retransmission_time));
        }
        if max_attempts == 0 {
            return Err(ConfigError::MaxAttempts);
        }
        Ok(Self {
            chunk_size,
            retransmission_time,
            max_attempts,
        })
    }

    /// Bytes per chunk.
    pub fn chunk_size(&self) -> u32 {
        self.chunk_size
    }

    /// Seconds the petitioner waits before resending a FIRQ or DRQ.
    pub fn retransmission_time(&self) -> f64 {
        self.retransmission_time
    }

    pub fn max_attempts(&self) -> u32 {
        self.max_attempts
    }

    /// How long an owner keeps a silent transfer alive.
    pub fn owner_idle_timeout(&self) -> f64 {
        10.0 * self.retransmission_time
    }
}

/// The six reference configurations: five tuned by metaheuristics and one
/// chosen by protocol experts.
pub const PRESETS: [(&str, u32, f64, u32); 6] = [
    ("PSO", 41_358, 10.00, 3),
    ("DE", 28_278, 6.00, 9),
    ("ES", 23_433, 10.00, 8),
    ("GA", 31_196, 3.83, 9),
    ("SA", 19_756, 6.43, 3),
    ("EXPERTS", 25_600, 8.00, 8),
];

/// All presets in their canonical order.
pub fn presets() -> Vec<(&'static str, ProtocolConfig)> {
    PRESETS
        .iter()
        .map(|&(name, chunk, rto, attempts)| {
            let cfg = ProtocolConfig::new(chunk, rto, attempts).expect("preset is valid");
            (name, cfg)
        })
        .collect()
}

/// Looks up a preset by name, ignoring ASCII case.
pub fn preset(name: &str) -> Option<ProtocolConfig> {
    presets()
        .into_iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, cfg)| cfg)
}
