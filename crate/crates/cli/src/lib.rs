//! Command line front end: TOML configuration, JSON reports and subcommands.

pub mod commands;
pub mod config;
pub mod report;
