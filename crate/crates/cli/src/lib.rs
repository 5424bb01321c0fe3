//! Subcommands of the `refgame` binary.

pub mod args;
pub mod commands;
pub mod config;

pub use args::Cli;
pub use commands::run;
