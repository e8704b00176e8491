//! Configuration, synthetic benchmark generation and the analysis commands
//! behind the `timesplit` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod synth;
