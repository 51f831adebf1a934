//! Nonparametric comparison of protocol configurations.
//!
//! Each block holds one goodput per configuration measured under the same
//! conditions. Values are ranked within their block, larger is better, and
//! the Friedman statistic tests whether the average ranks differ more than
//! chance allows.

pub mod friedman;
pub mod table;

pub use friedman::{
    chi_square_sf, friedman, rank_block, BlockMatrix, FriedmanResult, StatsError, ALPHA,
};
pub use table::{rank_table, RankTable, Scope};
