//! Library backing the `lossyavg` command-line experiment runner.
//!
//! Each subcommand is a pure function from a validated JSON config to
//! deterministic output artifacts (CSV curves, JSON reports). The binary in
//! `main.rs` only parses arguments, loads the config, and writes files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;
