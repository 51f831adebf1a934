//! Configuration rank tables built from experiment results.

use std::fmt;
use std::str::FromStr;

use vdtp_bench::ResultSet;

use crate::friedman::{friedman, BlockMatrix, FriedmanResult, StatsError};

/// Which trials enter the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scope {
    /// Only the regime named `low`.
    Low,
    /// Only the regime named `high`.
    High,
    /// Every regime, each (file size, repetition, regime) its own block.
    Combined,
}

impl Scope {
    pub fn as_str(self) -> &'static str {
        match self {
            Scope::Low => "low",
            Scope::High => "high",
            Scope::Combined => "combined",
        }
    }

    fn admits(self, regime: &str) -> bool {
        match self {
            Scope::Combined => true,
            s => s.as_str() == regime,
        }
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Scope::Low),
            "high" => Ok(Scope::High),
            "combined" => Ok(Scope::Combined),
            other => Err(format!(
                "unknown scope {other:?} (expected low, high or combined)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub scope: Scope,
    /// Configurations by descending average rank.
    pub entries: Vec<(String, f64)>,
    pub test: FriedmanResult,
    pub blocks_used: usize,
    /// Blocks left out because some configuration did not complete there.
    pub blocks_dropped: usize,
}

impl RankTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("config,avg_rank\n");
        for (name, rank) in &self.entries {
            out.push_str(&format!("{name},{rank:.4}\n"));
        }
        out
    }

    /// `{"statistic":…,"df":…,"p_value":…,"significant":…}` on one line.
    pub fn json(&self) -> String {
        serde_json::to_string(&self.test).expect("plain numbers serialize")
    }
}

/// Ranks the configurations of `rs` by goodput with a Friedman test. One
/// block is one (file size, repetition[, regime]) cell; a block is used only
/// if every configuration completed there.
pub fn rank_table(rs: &ResultSet, scope: Scope) -> Result<RankTable, StatsError> {
    let trials: Vec<_> = rs
        .trials
        .iter()
        .filter(|t| scope.admits(&t.regime))
        .collect();
    let mut configs: Vec<&str> = Vec::new();
    let mut keys: Vec<(u64, u32, &str)> = Vec::new();
    for t in &trials {
        if !configs.contains(&t.config.as_str()) {
            configs.push(&t.config);
        }
        let key = (t.file_size, t.rep, t.regime.as_str());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let k = configs.len();
    if k < 2 {
        return Err(StatsError::TooFewTreatments(k));
    }
    let mut cells: Vec<Vec<Option<f64>>> = vec![vec![None; k]; keys.len()];
    let mut seen = vec![vec![0u32; k]; keys.len()];
    for t in &trials {
        let b = keys
            .iter()
            .position(|key| *key == (t.file_size, t.rep, t.regime.as_str()))
            .expect("key recorded above");
        let j = configs
            .iter()
            .position(|c| *c == t.config)
            .expect("config recorded above");
        cells[b][j] = t.goodput;
        seen[b][j] += 1;
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (b, key) in keys.iter().enumerate() {
        let complete: Option<Vec<f64>> = cells[b].iter().copied().collect();
        if let (Some(row), true) = (complete, seen[b].iter().all(|&n| n == 1)) {
            rows.push(row);
            labels.push(format!("{}/{}/{}", key.0, key.1, key.2));
        }
    }
    let blocks_used = rows.len();
    let matrix = BlockMatrix::new(
        configs.iter().map(|c| c.to_string()).collect(),
        labels,
        rows,
    )?;
    let test = friedman(&matrix)?;
    let mut entries: Vec<(String, f64)> = configs
        .iter()
        .map(|c| c.to_string())
        .zip(test.avg_ranks.iter().copied())
        .collect();
    // stable: equal ranks keep their first-appearance order
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(RankTable {
        scope,
        entries,
        test,
        blocks_used,
        blocks_dropped: keys.len() - blocks_used,
    })
}
