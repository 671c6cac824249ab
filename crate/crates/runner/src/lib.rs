//! Scenario runner: JSON-configured experiments over the `ri-mech` library,
//! CSV tables, result summaries and the acceptance criteria.

pub mod config;
pub mod criteria;
pub mod error;
pub mod pipelines;
pub mod registry;
pub mod report;
pub mod result;
pub mod table;

pub use config::{load_scenario, parse_scenario, ConfigError, Kind, ScenarioConfig};
pub use error::RunError;
pub use pipelines::{compute_scenario, run_scenario, RunOptions};
pub use result::{Check, RunResult};
