//! Std companion of `ctexact-core`: table files, run configuration, rayon
//! drivers, JSON reports and the command pipeline behind the `ctexact`
//! binary.

pub mod config;
pub mod demo;
pub mod parallel;
pub mod parse;
pub mod report;
pub mod run;

pub use config::{Cli, Command, ConfigError, Mode, RawConfig, RunConfig, TestName};
pub use parse::{parse_table, ParseError};
pub use run::{execute, run_cli, RunError};
