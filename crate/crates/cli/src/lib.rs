//! Batch front end for the `semiclassical` crate: one JSON config per run,
//! data files plus a manifest out.

pub mod config;
pub mod run;

pub use config::{parse_config, validate_config, ConfigIssue, Scenario, ScenarioConfig};
pub use run::{run_scenario, Check, RunError, RunOptions, RunOutcome};
