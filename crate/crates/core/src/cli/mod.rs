//! Command-line front end: configuration, the pipeline commands and their
//! output files.

pub mod commands;
pub mod config;
pub mod output;
pub mod stats;

pub use commands::{cmd_project, cmd_prune, cmd_score, RunOutcome, RunReport, Timings};
pub use config::{Cli, Command, FileConfig, RunArgs, RunConfig};
pub use stats::{cmd_stats, StatsSummary};
