//! Scenario files, CSV/manifest output and subcommands for the `kinwave` driver.

pub mod commands;
pub mod csv_io;
pub mod manifest;
pub mod scenario_file;
