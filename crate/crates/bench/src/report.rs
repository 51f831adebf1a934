//! Summary tables over a result set.

use std::fmt::Write as _;

use crate::run::{ResultSet, TrialResult};

pub const AVERAGE: &str = "AVERAGE";
pub const GLOBAL: &str = "GLOBAL";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    /// A configuration name, [`AVERAGE`] or [`GLOBAL`].
    pub label: String,
    /// Absent on [`GLOBAL`] rows.
    pub file_size: Option<u64>,
    pub regime: String,
    pub trials: usize,
    pub completed: usize,
    /// Over completed trials.
    pub mean_lost_packets: Option<f64>,
    /// KB/s over completed trials.
    pub mean_goodput: Option<f64>,
}

impl SummaryRow {
    /// Trials that did not complete.
    pub fn refused(&self) -> usize {
        self.trials - self.completed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub regimes: Vec<String>,
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    pub fn row(&self, label: &str, file_size: Option<u64>, regime: &str) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.label == label && r.file_size == file_size && r.regime == regime)
    }

    pub fn global(&self, regime: &str) -> Option<&SummaryRow> {
        self.row(GLOBAL, None, regime)
    }
}

/// Distinct values in order of first appearance.
fn distinct<T: PartialEq + Clone>(items: impl Iterator<Item = T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn summarize<'a>(
    label: &str,
    file_size: Option<u64>,
    regime: &str,
    trials: impl Iterator<Item = &'a TrialResult>,
) -> SummaryRow {
    let (mut n, mut done, mut lost, mut good) = (0usize, 0usize, 0u64, 0.0f64);
    for t in trials {
        n += 1;
        if let Some(g) = t.goodput {
            done += 1;
            lost += t.lost_packets;
            good += g;
        }
    }
    let mean = |sum: f64| (done > 0).then(|| sum / done as f64);
    SummaryRow {
        label: label.to_string(),
        file_size,
        regime: regime.to_string(),
        trials: n,
        completed: done,
        mean_lost_packets: mean(lost as f64),
        mean_goodput: mean(good),
    }
}

/// Mean lost packets and goodput per (file size, config, regime), an
/// [`AVERAGE`] row per (file size, regime) and a [`GLOBAL`] row per regime.
pub fn aggregate(rs: &ResultSet) -> Summary {
    let trials = &rs.trials;
    let sizes = distinct(trials.iter().map(|t| t.file_size));
    let configs = distinct(trials.iter().map(|t| t.config.as_str()));
    let regimes = distinct(trials.iter().map(|t| t.regime.as_str()));
    let mut rows = Vec::new();
    for &size in &sizes {
        for &config in &configs {
            for &regime in &regimes {
                let cell = trials
                    .iter()
                    .filter(|t| t.file_size == size && t.config == config && t.regime == regime);
                rows.push(summarize(config, Some(size), regime, cell));
            }
        }
        for &regime in &regimes {
            let cell = trials
                .iter()
                .filter(|t| t.file_size == size && t.regime == regime);
            rows.push(summarize(AVERAGE, Some(size), regime, cell));
        }
    }
    for &regime in &regimes {
        rows.push(summarize(
            GLOBAL,
            None,
            regime,
            trials.iter().filter(|t| t.regime == regime),
        ));
    }
    Summary {
        regimes: regimes.into_iter().map(String::from).collect(),
        rows,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.3}")).unwrap_or_default()
}

pub fn summary_csv(s: &Summary) -> String {
    let mut out = String::from(
        "file_size_bytes,config,regime,trials,completed,refused,mean_lost_packets,mean_goodput_kbs\n",
    );
    for r in &s.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.file_size.map(|v| v.to_string()).unwrap_or_default(),
            r.label,
            r.regime,
            r.trials,
            r.completed,
            r.refused(),
            opt(r.mean_lost_packets),
            opt(r.mean_goodput),
        );
    }
    out
}

/// Table with one line per (file size, config) and lost/goodput/refused
/// columns for each regime.
pub fn summary_text(s: &Summary) -> String {
    let mut header = vec!["file size".to_string(), "config".to_string()];
    for reg in &s.regimes {
        header.push(format!("{reg} lost"));
        header.push(format!("{reg} KB/s"));
        header.push(format!("{reg} refused"));
    }
    let mut lines = vec![header];
    let keys = distinct(s.rows.iter().map(|r| (r.file_size, r.label.as_str())));
    for (size, label) in keys {
        let mut line = match size {
            Some(v) => vec![v.to_string(), label.to_string()],
            None => vec![label.to_string(), String::new()],
        };
        for reg in &s.regimes {
            match s.row(label, size, reg) {
                Some(r) => {
                    line.push(opt(r.mean_lost_packets));
                    line.push(opt(r.mean_goodput));
                    line.push(r.refused().to_string());
                }
                None => line.extend([String::new(), String::new(), String::new()]),
            }
        }
        lines.push(line);
    }
    align(&lines)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LostDataRow {
    pub config: String,
    /// Aligned with [`LostData::regimes`].
    pub per_regime: Vec<u64>,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LostData {
    pub regimes: Vec<String>,
    /// Ascending by total, then by name.
    pub rows: Vec<LostDataRow>,
}

/// Total on-wire bytes dropped per configuration, split by regime.
pub fn lost_data_table(rs: &ResultSet) -> LostData {
    let configs = distinct(rs.trials.iter().map(|t| t.config.as_str()));
    let regimes = distinct(rs.trials.iter().map(|t| t.regime.as_str()));
    let mut rows: Vec<LostDataRow> = configs
        .iter()
        .map(|&config| {
            let per_regime: Vec<u64> = regimes
                .iter()
                .map(|&reg| {
                    rs.trials
                        .iter()
                        .filter(|t| t.config == config && t.regime == reg)
                        .map(|t| t.lost_bytes)
                        .sum()
                })
                .collect();
            LostDataRow {
                config: config.to_string(),
                total: per_regime.iter().sum(),
                per_regime,
            }
        })
        .collect();
    rows.sort_by(|a, b| a.total.cmp(&b.total).then_with(|| a.config.cmp(&b.config)));
    LostData {
        regimes: regimes.into_iter().map(String::from).collect(),
        rows,
    }
}

pub fn lost_data_csv(t: &LostData) -> String {
    let mut out = String::from("config");
    for r in &t.regimes {
        let _ = write!(out, ",{r}_lost_bytes");
    }
    out.push_str(",total_lost_bytes\n");
    for row in &t.rows {
        out.push_str(&row.config);
        for v in &row.per_regime {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{}", row.total);
    }
    out
}

pub fn lost_data_text(t: &LostData) -> String {
    let mut header = vec!["config".to_string()];
    header.extend(t.regimes.iter().map(|r| format!("{r} lost bytes")));
    header.push("total".into());
    let mut lines = vec![header];
    for row in &t.rows {
        let mut line = vec![row.config.clone()];
        line.extend(row.per_regime.iter().map(u64::to_string));
        line.push(row.total.to_string());
        lines.push(line);
    }
    align(&lines)
}

/// Left-aligns the first column, right-aligns the rest.
pub fn align(lines: &[Vec<String>]) -> String {
    let cols = lines.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            lines
                .iter()
                .filter_map(|l| l.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for line in lines {
        let mut text = String::new();
        for (c, cell) in line.iter().enumerate() {
            if c > 0 {
                text.push_str("  ");
            }
            if c == 0 {
                let _ = write!(text, "{cell:<w$}", w = widths[c]);
            } else {
                let _ = write!(text, "{cell:>w$}", w = widths[c]);
            }
        }
        out.push_str(text.trim_end());
        out.push('\n');
    }
    out
}
