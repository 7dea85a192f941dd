//! Command-line and HTTP front end for the `datasetlens_core` engine.

pub mod cli;
pub mod config;
pub mod server;
