//! The subcommands, as library functions returning typed errors.

use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;
use std::time::Instant;

use thiserror::Error;
use vdtp_bench::{
    aggregate, load, lost_data_csv, lost_data_table, lost_data_text, persist, run_matrix,
    summary_csv, summary_text, ExperimentSpec, PersistError,
};
use vdtp_core::{preset, DirStore, Owner, ProtocolConfig, TransferIds};
use vdtp_sim::{fetch, serve, FetchReport, ServeStats, TrialOutcome, UdpEndpoint};
use vdtp_stats::{rank_table, RankTable, Scope, StatsError};

use crate::scenario::{parse_scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Network(io::Error),
    #[error("results: {0}")]
    Results(PersistError),
    #[error("transfer refused: the owner stopped answering")]
    Refused,
    #[error("the owner has no file {0:?}")]
    NotFound(String),
    #[error("received data does not match the announced CRC32")]
    Corrupt,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) => 1,
            CliError::Io { .. } | CliError::Network(_) | CliError::Results(_) => 2,
            CliError::Refused => 3,
            CliError::NotFound(_) => 4,
            CliError::Corrupt => 5,
            CliError::InsufficientData(_) => 6,
        }
    }
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn named_config(name: &str) -> Result<ProtocolConfig, CliError> {
    preset(name).ok_or_else(|| {
        let known: Vec<_> = vdtp_core::PRESETS.iter().map(|p| p.0).collect();
        CliError::Usage(format!(
            "unknown config {name:?} (known: {})",
            known.join(", ")
        ))
    })
}

pub fn load_spec(scenario: Option<&Path>, seed: Option<u64>) -> Result<ExperimentSpec, CliError> {
    let mut spec = match scenario {
        Some(path) => parse_scenario(&fs::read_to_string(path).map_err(io_at(path))?)?,
        None => ExperimentSpec::default(),
    };
    if let Some(seed) = seed {
        spec.master_seed = seed;
    }
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub trials: usize,
    pub wall_seconds: f64,
}

/// Runs the matrix and writes the result CSV (plus metadata) to `out`.
pub fn run_sim(spec: &ExperimentSpec, out: &Path) -> Result<RunSummary, CliError> {
    let t0 = Instant::now();
    let rs = run_matrix(spec);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_at(dir))?;
    }
    persist(&rs, out).map_err(|e| match e {
        PersistError::Io { path, source } => CliError::Io { path, source },
        other => CliError::Results(other),
    })?;
    Ok(RunSummary {
        trials: rs.trials.len(),
        wall_seconds: t0.elapsed().as_secs_f64(),
    })
}

/// Serves files below `root` until `shutdown` is set. `on_ready` receives
/// the bound address before the first datagram is read.
pub fn run_serve(
    bind: &str,
    root: &Path,
    config: ProtocolConfig,
    shutdown: &AtomicBool,
    on_ready: impl FnOnce(SocketAddr),
) -> Result<ServeStats, CliError> {
    let store = DirStore::new(root).map_err(io_at(root))?;
    let mut ep = UdpEndpoint::bind(bind).map_err(CliError::Network)?;
    let local = ep.socket().local_addr().map_err(CliError::Network)?;
    log::info!("serving {} on {local}", store.root().display());
    on_ready(local);
    let mut owner: Owner<SocketAddr, _> = Owner::new(store, config.owner_idle_timeout());
    serve(&mut ep, &mut owner, shutdown).map_err(CliError::Network)
}

/// Downloads `file` from `peer` and writes it to `out` on success.
pub fn run_fetch(
    peer: &str,
    file: &str,
    config: ProtocolConfig,
    out: &Path,
) -> Result<FetchReport, CliError> {
    let peer: SocketAddr = peer
        .parse()
        .or_else(|_| {
            std::net::ToSocketAddrs::to_socket_addrs(peer)
                .ok()
                .and_then(|mut a| a.next())
                .ok_or(())
        })
        .map_err(|_| CliError::Usage(format!("cannot resolve peer address {peer:?}")))?;
    let bind = if peer.is_ipv4() {
        "0.0.0.0:0"
    } else {
        "[::]:0"
    };
    let mut ep = UdpEndpoint::bind(bind).map_err(CliError::Network)?;
    let report = fetch(&mut ep, peer, file, config, &mut TransferIds::default())
        .map_err(CliError::Network)?;
    match report.outcome {
        TrialOutcome::Complete => {
            let bytes = report
                .file_bytes
                .as_deref()
                .expect("complete transfers carry data");
            fs::write(out, bytes).map_err(io_at(out))?;
            Ok(report)
        }
        TrialOutcome::Refused | TrialOutcome::Incomplete => Err(CliError::Refused),
        TrialOutcome::NotFound => Err(CliError::NotFound(file.to_string())),
        TrialOutcome::Corrupt => Err(CliError::Corrupt),
    }
}

#[derive(Debug)]
pub struct Analysis {
    pub summary_text: String,
    pub lost_text: String,
    pub ranks: RankTable,
    pub written: Vec<PathBuf>,
}

/// Writes `summary.csv`, `lost_data.csv`, `ranks_<scope>.csv` and
/// `ranks_<scope>.json` into `out_dir`.
pub fn run_analyze(results: &Path, scope: Scope, out_dir: &Path) -> Result<Analysis, CliError> {
    let rs = load(results).map_err(|e| match e {
        PersistError::Empty => CliError::InsufficientData("the result set is empty".into()),
        other => CliError::Results(other),
    })?;
    let ranks = rank_table(&rs, scope)
        .map_err(|e: StatsError| CliError::InsufficientData(e.to_string()))?;
    let summary = aggregate(&rs);
    let lost = lost_data_table(&rs);
    fs::create_dir_all(out_dir).map_err(io_at(out_dir))?;
    let files = [
        ("summary.csv".to_string(), summary_csv(&summary)),
        ("lost_data.csv".to_string(), lost_data_csv(&lost)),
        (format!("ranks_{scope}.csv"), ranks.csv()),
        (format!("ranks_{scope}.json"), format!("{}\n", ranks.json())),
    ];
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(io_at(&path))?;
        written.push(path);
    }
    Ok(Analysis {
        summary_text: summary_text(&summary),
        lost_text: lost_data_text(&lost),
        ranks,
        written,
    })
}

/// Aligned text of a rank table with its test result.
pub fn ranks_text(t: &RankTable) -> String {
    let mut lines = vec![vec![
        "config".to_string(),
        format!("avg rank ({})", t.scope),
    ]];
    for (name, r) in &t.entries {
        lines.push(vec![name.clone(), format!("{r:.2}")]);
    }
    let mut out = vdtp_bench::report::align(&lines);
    out.push_str(&format!(
        "Friedman chi2 = {:.4}, df = {}, p = {:.6}{} ({} blocks, {} dropped)\n",
        t.test.statistic,
        t.test.df,
        t.test.p_value,
        if t.test.significant {
            ", significant at 95%"
        } else {
            ""
        },
        t.blocks_used,
        t.blocks_dropped
    ));
    out
}
