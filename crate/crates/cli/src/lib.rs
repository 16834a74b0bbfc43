//! Command-line surface for the sane engine: experiment configuration,
//! one-shot labeling, strategy comparison, and report/heatmap emission.
//! The binary in `main.rs` is a thin wrapper over [`main_entry`].

pub mod commands;
pub mod config;
pub mod error;
pub mod heatmap;
pub mod labels;
pub mod report;
pub mod trace_io;

use std::io::BufRead;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sane", version, about = "Strategic autonomous exploration runner")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment and write trace, summary, and heatmaps.
    Run(CommonArgs),
    /// Present the initialization batch for good/bad labeling.
    Label(CommonArgs),
    /// Run every applicable strategy over a seed list and tabulate.
    Compare(SweepArgs),
    /// Run the configured strategy over a seed list and tabulate.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config's `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress console output; files are still written.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated seed list; defaults to the config's master seed.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Vec<u64>,
}

/// Dispatches a parsed command line; exit code 0 on success, 2 for
/// configuration problems, 3 for runtime failures.
pub fn dispatch(cli: Cli, input: &mut dyn BufRead) -> ExitCode {
    let result = match cli.command {
        Command::Run(args) => commands::cmd_run(&args),
        Command::Label(args) => commands::cmd_label(&args, input),
        Command::Compare(args) => commands::cmd_compare(&args),
        Command::Sweep(args) => commands::cmd_sweep(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    let stdin = std::io::stdin();
    let mut lock = stdin.lock();
    dispatch(cli, &mut lock)
}
