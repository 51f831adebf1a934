//! Experiment harness for VDTP.
//!
//! [`run_matrix`] runs every (configuration, file size, mobility regime,
//! repetition) cell of an [`ExperimentSpec`] as one simulated transfer, in
//! parallel but with results in a fixed order. Each trial draws from its own
//! stream, `master_seed ⊕ cell index`, so a spec always yields the same
//! [`ResultSet`].
//!
//! Goodput is reported in decimal kilobytes per second. Trials that do not
//! complete are kept in the set and counted separately by [`aggregate`].

pub mod experiment;
pub mod persist;
pub mod report;
pub mod run;

pub use experiment::{
    Cell, ExperimentSpec, NamedConfig, Regime, SpecError, DEFAULT_FILE_SIZES, DEFAULT_REPETITIONS,
    DEFAULT_TIME_BOUND,
};
pub use persist::{load, metadata_path, parse_results, persist, results_csv, PersistError};
pub use report::{
    aggregate, lost_data_csv, lost_data_table, lost_data_text, summary_csv, summary_text, LostData,
    LostDataRow, Summary, SummaryRow, AVERAGE, GLOBAL,
};
pub use run::{
    build_store, file_name, goodput, run_matrix, GoodputError, ResultMeta, ResultSet, TrialResult,
    SCHEMA_VERSION,
};
