//! Front end for `dephase-core`: configuration, subcommands and output.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
