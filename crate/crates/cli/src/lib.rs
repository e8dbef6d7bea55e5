//! Library half of `ambiguity-kit`: config parsing, command dispatch and
//! reports. The binary is a thin wrapper around [`commands::run`].

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Options};
pub use config::{parse_config, CommandName, ConfigError, ExperimentConfig};
pub use report::Report;

/// Exit status for runs where every check is consistent.
pub const EXIT_CONSISTENT: u8 = 0;
/// Exit status for errors of any kind.
pub const EXIT_ERROR: u8 = 1;
/// Exit status when at least one check reports a violation.
pub const EXIT_VIOLATED: u8 = 2;
