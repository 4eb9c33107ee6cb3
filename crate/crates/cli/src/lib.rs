//! Command-line front end and HTTP session server for `gamelogic-core`.

pub mod commands;
pub mod error;
pub mod files;
pub mod report;
pub mod serve;
pub mod session;

pub use error::CliError;
