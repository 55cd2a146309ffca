//! Config-driven experiment runner for the triangular recurrence library.

pub mod config;
pub mod error;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Pipeline, SimSpec};
pub use error::CliError;
pub use report::{compare_reports, DiffEntry, DiffStatus, RunReport, StepError};
pub use runner::{run, run_and_write, write_output, RunOutput, Timing};
