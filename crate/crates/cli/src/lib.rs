//! Command-line front end for `splitsolve`: config files, run CSVs,
//! benchmark suites and operator diagnostics.

pub mod commands;
pub mod config;
pub mod report;
pub mod suites;
