//! Scenario runner for elastic curve flows.

pub mod config;
pub mod error;
pub mod scenario;

pub use config::{parse_config, ScenarioSpec};
pub use error::CliError;
pub use scenario::{run_scenario, RunReport, Summary};
