//! Within-block ranking and the Friedman test.

use serde::Serialize;
use thiserror::Error;

/// Significance level of the test.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least 2 complete blocks, have {0}")]
    InsufficientData(usize),
    #[error("need at least 2 treatments, have {0}")]
    TooFewTreatments(usize),
    #[error("block {block} has {found} values, expected {expected}")]
    RaggedBlock {
        block: usize,
        found: usize,
        expected: usize,
    },
    #[error("block {block} holds a non-finite value")]
    NonFinite { block: usize },
}

/// Ranks `row` so that the largest value gets rank `k`. Tied values share
/// the mean of the ranks they span.
pub fn rank_block(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && row[order[j]] == row[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let mid = (i + 1 + j) as f64 / 2.0;
        for &o in &order[i..j] {
            ranks[o] = mid;
        }
        i = j;
    }
    ranks
}

/// `N` blocks by `k` treatments, no missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMatrix {
    treatments: Vec<String>,
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl BlockMatrix {
    pub fn new(
        treatments: Vec<String>,
        labels: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, StatsError> {
        let k = treatments.len();
        if k < 2 {
            return Err(StatsError::TooFewTreatments(k));
        }
        for (block, row) in values.iter().enumerate() {
            if row.len() != k {
                return Err(StatsError::RaggedBlock {
                    block,
                    found: row.len(),
                    expected: k,
                });
            }
            if !row.iter().all(|v| v.is_finite()) {
                return Err(StatsError::NonFinite { block });
            }
        }
        debug_assert!(labels.is_empty() || labels.len() == values.len());
        Ok(Self {
            treatments,
            labels,
            values,
        })
    }

    /// Unlabelled blocks with treatments named `t0`, `t1`, ...
    pub fn from_rows(values: Vec<Vec<f64>>) -> Result<Self, StatsError> {
        let k = values.first().map_or(0, Vec::len);
        Self::new(
            (0..k).map(|j| format!("t{j}")).collect(),
            Vec::new(),
            values,
        )
    }

    pub fn treatments(&self) -> &[String] {
        &self.treatments
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn blocks(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FriedmanResult {
    #[serde(skip)]
    pub avg_ranks: Vec<f64>,
    pub statistic: f64,
    pub df: u32,
    pub p_value: f64,
    pub significant: bool,
}

/// Friedman statistic `12N/(k(k+1)) · Σ (R̄ⱼ − (k+1)/2)²` without tie
/// correction, with its chi-square tail probability on `k − 1` degrees of
/// freedom.
pub fn friedman(m: &BlockMatrix) -> Result<FriedmanResult, StatsError> {
    let n = m.blocks();
    if n < 2 {
        return Err(StatsError::InsufficientData(n));
    }
    let k = m.treatments.len();
    let mut sums = vec![0.0; k];
    for row in &m.values {
        for (s, r) in sums.iter_mut().zip(rank_block(row)) {
            *s += r;
        }
    }
    let avg_ranks: Vec<f64> = sums.iter().map(|s| s / n as f64).collect();
    let center = (k as f64 + 1.0) / 2.0;
    let spread: f64 = avg_ranks.iter().map(|r| (r - center).powi(2)).sum();
    let statistic = 12.0 * n as f64 / (k as f64 * (k as f64 + 1.0)) * spread;
    let df = (k - 1) as u32;
    let p_value = chi_square_sf(statistic, df);
    Ok(FriedmanResult {
        avg_ranks,
        statistic,
        df,
        p_value,
        significant: p_value < ALPHA,
    })
}

/// Upper-tail probability of the chi-square distribution,
/// `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    assert!(df > 0, "degrees of freedom must be positive");
    if x <= 0.0 {
        return 1.0;
    }
    statrs::function::gamma::gamma_ur(df as f64 / 2.0, x / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks() {
        assert_eq!(rank_block(&[10.0, 30.0, 20.0]), [1.0, 3.0, 2.0]);
        assert_eq!(rank_block(&[5.0, 5.0, 9.0]), [1.5, 1.5, 3.0]);
        assert_eq!(rank_block(&[4.0; 6]), [3.5; 6]);
        assert_eq!(rank_block(&[2.0, 1.0, 2.0, 2.0]), [3.0, 1.0, 3.0, 3.0]);
    }

    #[test]
    fn hand_worked_three_by_three() {
        let m = BlockMatrix::from_rows(vec![vec![1.0, 2.0, 3.0]; 3]).unwrap();
        let r = friedman(&m).unwrap();
        assert_eq!(r.avg_ranks, [1.0, 2.0, 3.0]);
        assert!((r.statistic - 6.0).abs() < 1e-12);
        assert_eq!(r.df, 2);
        assert!((r.p_value - (-3.0f64).exp()).abs() < 1e-12);
        assert!((r.p_value - 0.049787068367863944).abs() < 1e-9);
        assert!(r.significant);
    }

    #[test]
    fn identical_columns_are_null() {
        let m = BlockMatrix::from_rows(vec![vec![7.0; 4]; 5]).unwrap();
        let r = friedman(&m).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant);
    }

    #[test]
    fn two_treatments_three_blocks() {
        let m =
            BlockMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = friedman(&m).unwrap();
        assert!((r.avg_ranks[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((r.avg_ranks[1] - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        assert_eq!(
            friedman(&BlockMatrix::from_rows(vec![vec![1.0, 2.0]]).unwrap()),
            Err(StatsError::InsufficientData(1))
        );
        assert_eq!(
            BlockMatrix::from_rows(vec![vec![1.0]]),
            Err(StatsError::TooFewTreatments(1))
        );
        assert!(matches!(
            BlockMatrix::from_rows(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(StatsError::RaggedBlock { block: 1, .. })
        ));
        assert_eq!(
            BlockMatrix::from_rows(vec![vec![1.0, f64::NAN]]),
            Err(StatsError::NonFinite { block: 0 })
        );
    }

    #[test]
    fn known_tail_values() {
        // scipy.stats.chi2.sf
        let cases = [
            (0.0, 3, 1.0),
            (6.0, 2, 0.049787068367863944),
            (3.841, 1, 0.050013683763956804),
            (0.5, 1, 0.47950012218695337),
            (10.0, 5, 0.07523524614651217),
            (30.0, 20, 0.06985366069940986),
            (100.0, 50, 3.454931382984871e-05),
            (150.0, 40, 1.2397921541617078e-14),
            (2.0, 7, 0.9598403687301016),
        ];
        for (x, df, want) in cases {
            let got = chi_square_sf(x, df);
            assert!(
                (got - want).abs() <= 1e-9,
                "sf({x}, {df}) = {got}, want {want}"
            );
        }
    }
}
