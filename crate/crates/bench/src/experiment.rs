//! The experiment matrix: which configurations, file sizes, mobility regimes
//! and how many repetitions.

use std::collections::HashSet;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;
use vdtp_core::{presets, ProtocolConfig};
use vdtp_sim::{ChannelError, ChannelParams, MobilityError, MobilityProfile};

pub const DEFAULT_FILE_SIZES: [u64; 5] = [100_000, 500_000, 1_000_000, 5_000_000, 10_000_000];
pub const DEFAULT_REPETITIONS: u32 = 15;
/// Virtual seconds after which an unfinished trial is recorded as incomplete.
pub const DEFAULT_TIME_BOUND: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedConfig {
    pub name: String,
    pub config: ProtocolConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Regime {
    pub name: String,
    pub profile: MobilityProfile,
}

impl Regime {
    pub fn low() -> Self {
        Self {
            name: "low".into(),
            profile: MobilityProfile::urban_low(),
        }
    }

    pub fn high() -> Self {
        Self {
            name: "high".into(),
            profile: MobilityProfile::urban_high(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("the {0} list is empty")]
    Empty(&'static str),
    #[error("duplicate {kind} name {name:?}")]
    DuplicateName { kind: &'static str, name: String },
    #[error("file sizes must be positive")]
    ZeroFileSize,
    #[error("time bound must be positive and finite, got {0}")]
    TimeBound(f64),
    #[error("channel: {0}")]
    Channel(#[from] ChannelError),
    #[error("regime {name:?}: {source}")]
    Regime { name: String, source: MobilityError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub configs: Vec<NamedConfig>,
    pub file_sizes: Vec<u64>,
    pub repetitions: u32,
    pub regimes: Vec<Regime>,
    pub channel: ChannelParams,
    pub master_seed: u64,
    pub time_bound: f64,
}

impl Default for ExperimentSpec {
    /// Six presets × five sizes × 15 repetitions × low/high speed.
    fn default() -> Self {
        Self {
            configs: presets()
                .into_iter()
                .map(|(name, config)| NamedConfig {
                    name: name.into(),
                    config,
                })
                .collect(),
            file_sizes: DEFAULT_FILE_SIZES.to_vec(),
            repetitions: DEFAULT_REPETITIONS,
            regimes: vec![Regime::low(), Regime::high()],
            channel: ChannelParams::default(),
            master_seed: 0,
            time_bound: DEFAULT_TIME_BOUND,
        }
    }
}

/// Position of one trial in the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub config: usize,
    pub file_size: usize,
    pub regime: usize,
    pub rep: u32,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        if self.repetitions == 0 {
            return Err(SpecError::NoRepetitions);
        }
        if self.configs.is_empty() {
            return Err(SpecError::Empty("configs"));
        }
        if self.file_sizes.is_empty() {
            return Err(SpecError::Empty("file_sizes"));
        }
        if self.regimes.is_empty() {
            return Err(SpecError::Empty("regimes"));
        }
        if self.file_sizes.contains(&0) {
            return Err(SpecError::ZeroFileSize);
        }
        if !(self.time_bound > 0.0 && self.time_bound.is_finite()) {
            return Err(SpecError::TimeBound(self.time_bound));
        }
        unique("config", self.configs.iter().map(|c| c.name.as_str()))?;
        unique("regime", self.regimes.iter().map(|r| r.name.as_str()))?;
        self.channel.validate()?;
        for r in &self.regimes {
            r.profile.validate().map_err(|source| SpecError::Regime {
                name: r.name.clone(),
                source,
            })?;
        }
        Ok(())
    }

    pub fn trial_count(&self) -> usize {
        self.configs.len() * self.file_sizes.len() * self.regimes.len() * self.repetitions as usize
    }

    /// Cells in canonical order: config, then file size, then regime, then
    /// repetition.
    pub fn cell(&self, index: usize) -> Cell {
        let reps = self.repetitions as usize;
        let per_regime = reps;
        let per_size = per_regime * self.regimes.len();
        let per_config = per_size * self.file_sizes.len();
        Cell {
            config: index / per_config,
            file_size: index % per_config / per_size,
            regime: index % per_size / per_regime,
            rep: (index % per_regime) as u32,
        }
    }

    /// Seed of the trial at `index`.
    pub fn trial_seed(&self, index: usize) -> u64 {
        self.master_seed ^ index as u64
    }

    /// Stable digest of everything that influences the results.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        for c in &self.configs {
            let cfg = &c.config;
            let _ = write!(
                canon,
                "config {:?} {} {:?} {};",
                c.name,
                cfg.chunk_size(),
                cfg.retransmission_time(),
                cfg.max_attempts()
            );
        }
        let _ = write!(
            canon,
            "sizes {:?};reps {};",
            self.file_sizes, self.repetitions
        );
        for r in &self.regimes {
            let p = &r.profile;
            let _ = write!(
                canon,
                "regime {:?} {:?} {:?} {:?} {:?} {:?} {:?};",
                r.name,
                p.speed_min,
                p.speed_max,
                p.mean_distance,
                p.distance_bounds,
                p.reversion_rate,
                p.noise_coefficient
            );
        }
        let ch = &self.channel;
        let _ = write!(
            canon,
            "channel {:?} {:?} {:?} {:?} {:?} {};seed {};bound {:?}",
            ch.capacity,
            ch.radio_range,
            ch.base_loss,
            ch.loss_exponent,
            ch.processing_delay,
            ch.rng_seed,
            self.master_seed,
            self.time_bound
        );
        let digest = Sha256::digest(canon.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn unique<'a>(kind: &'static str, names: impl Iterator<Item = &'a str>) -> Result<(), SpecError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(SpecError::DuplicateName {
                kind,
                name: n.to_string(),
            });
        }
    }
    Ok(())
}
