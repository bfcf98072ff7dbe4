//! Configuration files, CSV diagnostics and binary snapshots.

pub mod config;
pub mod csv;
pub mod snapshot;
