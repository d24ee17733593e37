//! Command-line driver for the jbf pipeline: `scan`, `index`, `build`,
//! `report`, and `all` to chain them.

pub mod commands;
pub mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use config::{AdapterKind, Flags, RunConfig};

/// Exit status for completed commands, even when projects failed to build.
pub const EXIT_OK: u8 = 0;
/// Exit status for configuration and I/O errors.
pub const EXIT_FATAL: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "jbf", version, about = "Mass compilation of Java projects")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Find projects and harvest their jars into the store.
    Scan,
    /// Build the FQN index over the store.
    Index,
    /// Compile every project in up to two rounds.
    Build,
    /// Summarise the last build.
    Report,
    /// scan, index, build and report.
    All,
}

/// Runs one command, returning the text it reports on stdout.
pub fn execute(command: Command, cfg: &RunConfig) -> anyhow::Result<String> {
    match command {
        Command::Scan => commands::cmd_scan(cfg),
        Command::Index => commands::cmd_index(cfg),
        Command::Build => commands::cmd_build(cfg),
        Command::Report => commands::cmd_report(cfg),
        Command::All => commands::cmd_all(cfg),
    }
}

/// Runs a parsed command line and maps the result to an exit status.
pub fn run(cli: Cli) -> ExitCode {
    let result = RunConfig::resolve(&cli.flags).and_then(|cfg| execute(cli.command, &cfg));
    match result {
        Ok(msg) => {
            print!("{msg}");
            ExitCode::from(EXIT_OK)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}
