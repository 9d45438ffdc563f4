//! Batch front end: JSON job configurations, job execution and result files
//! with a checksummed manifest.

pub mod config;
pub mod error;
pub mod jobs;
pub mod output;
pub mod report;

pub use config::{parse_config, JobConfig, JobKind};
pub use error::{CliError, Result};
pub use jobs::{execute, run, run_report, RunOptions, RunSummary};
