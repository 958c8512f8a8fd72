//! Scenario-file front-end for the sweep-core library.

pub mod config;
pub mod oracle_cmd;
pub mod run;

pub use config::{Diagnostic, Mode, ScenarioConfig, OUTPUT_ROOT_ENV};
pub use oracle_cmd::run_oracle;
pub use run::{exit, run, RunError, RunOutcome};
