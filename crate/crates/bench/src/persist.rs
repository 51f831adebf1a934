//! Result sets on disk: a CSV of trials plus a JSON metadata sidecar.

use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;
use vdtp_sim::TrialOutcome;

use crate::run::{ResultMeta, ResultSet, TrialResult, SCHEMA_VERSION};

pub const RESULTS_HEADER: [&str; 9] = [
    "config",
    "file_size_bytes",
    "regime",
    "rep",
    "outcome",
    "elapsed_s",
    "lost_packets",
    "lost_bytes",
    "goodput_kbs",
];

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("line {line}: {reason}")]
    CorruptRow { line: u64, reason: String },
    #[error("result set is empty")]
    Empty,
    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error("metadata announces {expected} trials, file holds {found}")]
    CountMismatch { expected: usize, found: usize },
}

/// `results.csv` → `results.meta.json`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Renders the trial table. Floats use the shortest representation that
/// parses back to the same value.
pub fn results_csv(trials: &[TrialResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).expect("in-memory write");
    for t in trials {
        w.write_record([
            t.config.clone(),
            t.file_size.to_string(),
            t.regime.clone(),
            t.rep.to_string(),
            t.outcome.as_str().to_string(),
            t.elapsed.to_string(),
            t.lost_packets.to_string(),
            t.lost_bytes.to_string(),
            t.goodput.map(|g| g.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Writes the CSV at `path` and the metadata next to it.
pub fn persist(rs: &ResultSet, path: &Path) -> Result<(), PersistError> {
    fs::write(path, results_csv(&rs.trials)).map_err(io_err(path))?;
    let meta_path = metadata_path(path);
    let mut json = serde_json::to_string_pretty(&rs.meta)?;
    json.push('\n');
    fs::write(&meta_path, json).map_err(io_err(&meta_path))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ResultSet, PersistError> {
    let meta_path = metadata_path(path);
    let meta_text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta = parse_metadata(&meta_text)?;
    let file = fs::File::open(path).map_err(io_err(path))?;
    let trials = parse_results(file)?;
    if trials.len() != meta.trials {
        return Err(PersistError::CountMismatch {
            expected: meta.trials,
            found: trials.len(),
        });
    }
    Ok(ResultSet { meta, trials })
}

pub fn parse_metadata(text: &str) -> Result<ResultMeta, PersistError> {
    let meta: ResultMeta = serde_json::from_str(text)?;
    if meta.schema_version != SCHEMA_VERSION {
        return Err(PersistError::SchemaVersion {
            found: meta.schema_version,
        });
    }
    Ok(meta)
}

/// Parses the trial table. Columns are located by name; extra columns are
/// ignored.
pub fn parse_results(input: impl Read) -> Result<Vec<TrialResult>, PersistError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(PersistError::Empty);
    }
    let mut idx = [0usize; 9];
    for (slot, name) in idx.iter_mut().zip(RESULTS_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(PersistError::MissingColumn(name))?;
    }
    let mut trials = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let corrupt = |reason: String| PersistError::CorruptRow { line, reason };
        let field = |i: usize| record.get(idx[i]).unwrap_or("");
        fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
            s.trim().parse().map_err(|_| format!("bad {what} {s:?}"))
        }
        let finite = |s: &str, what: &str| -> Result<f64, String> {
            let v: f64 = num(s, what)?;
            if v.is_finite() && v >= 0.0 {
                Ok(v)
            } else {
                Err(format!("{what} must be finite and non-negative, got {s:?}"))
            }
        };
        let outcome: TrialOutcome = field(4).trim().parse().map_err(corrupt)?;
        let goodput = match field(8).trim() {
            "" => None,
            g => Some(finite(g, "goodput_kbs").map_err(corrupt)?),
        };
        if goodput.is_some() != (outcome == TrialOutcome::Complete) {
            return Err(corrupt(format!(
                "goodput must be present exactly for complete trials (outcome {outcome})"
            )));
        }
        let config = field(0).to_string();
        let regime = field(2).to_string();
        if config.is_empty() || regime.is_empty() {
            return Err(corrupt("empty config or regime name".into()));
        }
        trials.push(TrialResult {
            config,
            file_size: num(field(1), "file_size_bytes").map_err(corrupt)?,
            regime,
            rep: num(field(3), "rep").map_err(corrupt)?,
            outcome,
            elapsed: finite(field(5), "elapsed_s").map_err(corrupt)?,
            lost_packets: num(field(6), "lost_packets").map_err(corrupt)?,
            lost_bytes: num(field(7), "lost_bytes").map_err(corrupt)?,
            goodput,
        });
    }
    if trials.is_empty() {
        return Err(PersistError::Empty);
    }
    Ok(trials)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<TrialResult> {
        vec![
            TrialResult {
                config: "PSO".into(),
                file_size: 100_000,
                regime: "low".into(),
                rep: 0,
                outcome: TrialOutcome::Complete,
                elapsed: 0.16523817412,
                lost_packets: 0,
                lost_bytes: 0,
                goodput: Some(605.2050123),
            },
            TrialResult {
                config: "SA".into(),
                file_size: 10_000_000,
                regime: "high".into(),
                rep: 14,
                outcome: TrialOutcome::Refused,
                elapsed: 31.2,
                lost_packets: 4,
                lost_bytes: 79_096,
                goodput: None,
            },
        ]
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let bytes = results_csv(&sample());
        assert!(bytes.starts_with(RESULTS_HEADER.join(",").as_bytes()));
        assert_eq!(parse_results(&bytes[..]).unwrap(), sample());
    }

    #[test]
    fn missing_column_is_a_schema_error() {
        let text = "config,file_size_bytes,regime,rep,outcome,elapsed_s,lost_packets,goodput_kbs\nA,1,low,0,refused,1,0,\n";
        assert!(matches!(
            parse_results(text.as_bytes()),
            Err(PersistError::MissingColumn("lost_bytes"))
        ));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse_results(&b""[..]), Err(PersistError::Empty)));
        let header_only = format!("{}\n", RESULTS_HEADER.join(","));
        assert!(matches!(
            parse_results(header_only.as_bytes()),
            Err(PersistError::Empty)
        ));
    }

    #[test]
    fn corrupt_rows_are_located() {
        let head = RESULTS_HEADER.join(",");
        for (row, needle) in [
            ("A,xx,low,0,complete,1,0,0,1", "file_size_bytes"),
            ("A,1,low,0,finished,1,0,0,1", "outcome"),
            ("A,1,low,0,complete,1,0,0,", "goodput must be present"),
            ("A,1,low,0,refused,1,0,0,5", "goodput must be present"),
            ("A,1,low,0,complete,NaN,0,0,1", "elapsed_s"),
            ("A,1,low,0,complete,1,0,0", "csv"),
        ] {
            let text = format!("{head}\n{row}\n");
            let err = parse_results(text.as_bytes()).unwrap_err();
            assert!(err.to_string().contains(needle), "{row}: {err}");
        }
    }

    #[test]
    fn metadata_version_is_checked() {
        let json = r#"{"schema_version":99,"fingerprint":"x","master_seed":0,"tool_version":"0","trials":1}"#;
        assert!(matches!(
            parse_metadata(json),
            Err(PersistError::SchemaVersion { found: 99 })
        ));
        assert!(parse_metadata(&json.replace("99", "1")).is_ok());
        assert!(parse_metadata("{}").is_err());
    }
}
