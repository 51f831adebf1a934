//! Library side of the `vdtp` command: scenario parsing and the subcommand
//! implementations, kept out of `main` so they can be tested directly.

pub mod commands;
pub mod scenario;

pub use commands::CliError;
pub use scenario::{parse_scenario, ScenarioError};
