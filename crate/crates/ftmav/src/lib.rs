//! Scenario harness for `ftmav-core`: JSON configuration, closed-loop simulation with fault
//! injection, planner runs, table reproduction and CSV export.

pub mod config;
pub mod error;
pub mod format;
pub mod metrics;
pub mod planning;
pub mod scenarios;
pub mod sim;
pub mod tables;

pub use config::ScenarioConfig;
pub use error::HarnessError;
pub use sim::{run_simulation, SimLog};
pub use tables::reproduce_table;
