//! Scenario loading, command runners and reports behind the `iterint`
//! binary.

#![allow(clippy::type_complexity)]

pub mod commands;
pub mod error;
pub mod report;
pub mod scenario;
pub mod suites;

pub use commands::{resolve, run, Command};
pub use error::CliError;
pub use report::{Check, Report, Settings};
pub use scenario::{load, parse, ConfigOverrides, Scene};
