//! Executing the matrix in the simulator.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use vdtp_core::MemoryStore;
use vdtp_sim::{sim_run, Scenario, TrialOutcome, VehicularLink};

use crate::experiment::ExperimentSpec;

/// Version of the persisted result layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub config: String,
    pub file_size: u64,
    pub regime: String,
    pub rep: u32,
    pub outcome: TrialOutcome,
    pub elapsed: f64,
    pub lost_packets: u64,
    pub lost_bytes: u64,
    /// KB/s, present only for complete trials.
    pub goodput: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultMeta {
    pub schema_version: u32,
    pub fingerprint: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub meta: ResultMeta,
    pub trials: Vec<TrialResult>,
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("elapsed time must be positive, got {0}")]
pub struct GoodputError(pub f64);

/// Decimal kilobytes per second.
pub fn goodput(file_size: u64, elapsed: f64) -> Result<f64, GoodputError> {
    if elapsed > 0.0 {
        Ok(file_size as f64 / elapsed / 1_000.0)
    } else {
        Err(GoodputError(elapsed))
    }
}

/// File named after its size, filled with a stream that depends only on the
/// size.
pub fn file_name(size: u64) -> String {
    format!("{size}.bin")
}

pub fn build_store(sizes: &[u64]) -> MemoryStore {
    let mut store = MemoryStore::new();
    for &size in sizes {
        let mut data = vec![0u8; size as usize];
        ChaCha8Rng::seed_from_u64(size).fill_bytes(&mut data);
        store.insert(file_name(size), data);
    }
    store
}

/// Runs every cell of `spec`. Trials execute in parallel; the result order
/// is always the canonical cell order.
///
/// # Panics
///
/// If `spec` does not validate.
pub fn run_matrix(spec: &ExperimentSpec) -> ResultSet {
    if let Err(e) = spec.validate() {
        panic!("invalid experiment spec: {e}");
    }
    let store = Arc::new(build_store(&spec.file_sizes));
    let trials = (0..spec.trial_count())
        .into_par_iter()
        .map(|i| run_cell(spec, &store, i))
        .collect();
    ResultSet {
        meta: ResultMeta {
            schema_version: SCHEMA_VERSION,
            fingerprint: spec.fingerprint(),
            master_seed: spec.master_seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            trials: spec.trial_count(),
        },
        trials,
    }
}

fn run_cell(spec: &ExperimentSpec, store: &Arc<MemoryStore>, index: usize) -> TrialResult {
    let cell = spec.cell(index);
    let named = &spec.configs[cell.config];
    let size = spec.file_sizes[cell.file_size];
    let regime = &spec.regimes[cell.regime];
    let report = sim_run(Scenario {
        config: named.config,
        store: store.clone(),
        file_name: file_name(size),
        link: VehicularLink::new(
            spec.channel.clone(),
            regime.profile.clone(),
            spec.trial_seed(index),
        ),
        until: spec.time_bound,
        record_trace: false,
    });
    let complete = report.outcome == TrialOutcome::Complete;
    debug_assert!(!complete || report.file_bytes.as_ref().map(Vec::len) == Some(size as usize));
    TrialResult {
        config: named.name.clone(),
        file_size: size,
        regime: regime.name.clone(),
        rep: cell.rep,
        outcome: report.outcome,
        elapsed: report.elapsed,
        lost_packets: report.stats.lost_packets,
        lost_bytes: report.stats.lost_bytes,
        goodput: if complete {
            goodput(size, report.elapsed).ok()
        } else {
            None
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Regime;

    #[test]
    fn goodput_definition() {
        assert_eq!(goodput(1_000_000, 2.0), Ok(500.0));
        assert!((goodput(1_000_000, 1.4633).unwrap() - 683.387).abs() < 1e-3);
        assert_eq!(goodput(1, 0.0), Err(GoodputError(0.0)));
        assert!(goodput(1, -1.0).is_err());
    }

    #[test]
    fn single_cell_matrix() {
        let spec = ExperimentSpec {
            configs: ExperimentSpec::default().configs[..1].to_vec(),
            file_sizes: vec![100_000],
            repetitions: 1,
            regimes: vec![Regime::low()],
            ..ExperimentSpec::default()
        };
        let rs = run_matrix(&spec);
        assert_eq!(rs.trials.len(), 1);
        assert_eq!(rs.meta.trials, 1);
        let t = &rs.trials[0];
        assert_eq!(
            (t.config.as_str(), t.file_size, t.regime.as_str(), t.rep),
            ("PSO", 100_000, "low", 0)
        );
    }

    #[test]
    fn store_contents_depend_only_on_size() {
        use vdtp_core::FileStore;
        let a = build_store(&[10, 20]);
        let b = build_store(&[20]);
        assert_eq!(a.info("20.bin"), b.info("20.bin"));
        assert_eq!(a.info("10.bin").unwrap().size, 10);
    }
}
