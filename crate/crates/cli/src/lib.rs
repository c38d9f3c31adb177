//! File formats, configuration and batch execution for the `mer` tool.

pub mod batch;
pub mod commands;
pub mod config;
pub mod eval;
pub mod flo;
pub mod io;
pub mod manifest;
pub mod tables;

/// Schema versions of every external format, as printed by `--version`.
pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nflow file: magic 202021.25",
    "\nconfig schema: 1",
    "\nmanifest schema: 1",
    "\nrecord schema: 1",
    "\nsummary schema: 1",
    "\nrun manifest schema: 1",
);
