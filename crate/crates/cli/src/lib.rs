//! Library side of the `suspension` binary: config, artifact writers and
//! the subcommand implementations.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;
