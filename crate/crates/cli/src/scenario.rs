//! The JSON scenario file describing an experiment matrix.
//!
//! Every key is optional. A configuration entry whose name matches a
//! built-in preset inherits the preset's values for any field it leaves out.
//!
//! ```json
//! {
//!   "configs": [{"name": "EXPERTS"}, {"name": "big", "chunk_size": 60000,
//!                "retransmission_time": 5.0, "max_attempts": 4}],
//!   "file_sizes": [100000, 1000000],
//!   "repetitions": 15,
//!   "regimes": [{"name": "low", "speed_min": 20, "speed_max": 30}],
//!   "channel": {"base_loss": 0.0001},
//!   "master_seed": 7
//! }
//! ```

use serde::Deserialize;
use thiserror::Error;
use vdtp_bench::{
    ExperimentSpec, NamedConfig, Regime, DEFAULT_FILE_SIZES, DEFAULT_REPETITIONS,
    DEFAULT_TIME_BOUND,
};
use vdtp_core::{preset, ProtocolConfig};
use vdtp_sim::mobility::{
    DEFAULT_BOUNDS, DEFAULT_MEAN_DISTANCE, DEFAULT_NOISE_COEFFICIENT, DEFAULT_REVERSION_RATE,
};
use vdtp_sim::{ChannelParams, MobilityProfile};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigEntry {
    name: String,
    chunk_size: Option<u32>,
    retransmission_time: Option<f64>,
    max_attempts: Option<u32>,
}

fn default_mean() -> f64 {
    DEFAULT_MEAN_DISTANCE
}
fn default_bounds() -> [f64; 2] {
    DEFAULT_BOUNDS
}
fn default_rate() -> f64 {
    DEFAULT_REVERSION_RATE
}
fn default_noise() -> f64 {
    DEFAULT_NOISE_COEFFICIENT
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegimeEntry {
    name: String,
    speed_min: f64,
    speed_max: f64,
    #[serde(default = "default_mean")]
    mean_distance: f64,
    #[serde(default = "default_bounds")]
    distance_bounds: [f64; 2],
    #[serde(default = "default_rate")]
    reversion_rate: f64,
    #[serde(default = "default_noise")]
    noise_coefficient: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    configs: Option<Vec<ConfigEntry>>,
    file_sizes: Option<Vec<u64>>,
    repetitions: Option<u32>,
    regimes: Option<Vec<RegimeEntry>>,
    channel: Option<ChannelParams>,
    master_seed: Option<u64>,
    time_bound_s: Option<f64>,
}

impl ConfigEntry {
    fn resolve(self) -> Result<NamedConfig, ScenarioError> {
        let base = preset(&self.name);
        let missing = |field: &str| {
            ScenarioError::Invalid(format!(
                "config {:?} is not a preset and lacks {field}",
                self.name
            ))
        };
        let chunk = match (self.chunk_size, base) {
            (Some(v), _) => v,
            (None, Some(p)) => p.chunk_size(),
            (None, None) => return Err(missing("chunk_size")),
        };
        let rto = match (self.retransmission_time, base) {
            (Some(v), _) => v,
            (None, Some(p)) => p.retransmission_time(),
            (None, None) => return Err(missing("retransmission_time")),
        };
        let attempts = match (self.max_attempts, base) {
            (Some(v), _) => v,
            (None, Some(p)) => p.max_attempts(),
            (None, None) => return Err(missing("max_attempts")),
        };
        let config = ProtocolConfig::new(chunk, rto, attempts)
            .map_err(|e| ScenarioError::Invalid(format!("config {:?}: {e}", self.name)))?;
        Ok(NamedConfig {
            // presets keep their canonical spelling
            name: if base.is_some() {
                self.name.to_uppercase()
            } else {
                self.name
            },
            config,
        })
    }
}

/// Parses a scenario and checks it describes a runnable matrix.
pub fn parse_scenario(text: &str) -> Result<ExperimentSpec, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let defaults = ExperimentSpec::default();
    let configs = match file.configs {
        Some(list) => list
            .into_iter()
            .map(ConfigEntry::resolve)
            .collect::<Result<_, _>>()?,
        None => defaults.configs,
    };
    let regimes = match file.regimes {
        Some(list) => list
            .into_iter()
            .map(|r| Regime {
                name: r.name,
                profile: MobilityProfile {
                    speed_min: r.speed_min,
                    speed_max: r.speed_max,
                    mean_distance: r.mean_distance,
                    distance_bounds: r.distance_bounds,
                    reversion_rate: r.reversion_rate,
                    noise_coefficient: r.noise_coefficient,
                },
            })
            .collect(),
        None => defaults.regimes,
    };
    let spec = ExperimentSpec {
        configs,
        file_sizes: file
            .file_sizes
            .unwrap_or_else(|| DEFAULT_FILE_SIZES.to_vec()),
        repetitions: file.repetitions.unwrap_or(DEFAULT_REPETITIONS),
        regimes,
        channel: file.channel.unwrap_or_default(),
        master_seed: file.master_seed.unwrap_or(0),
        time_bound: file.time_bound_s.unwrap_or(DEFAULT_TIME_BOUND),
    };
    spec.validate()
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    Ok(spec)
}
