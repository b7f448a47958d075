//! `rtchain`: runs quenches and field sweeps of RT-symmetric spin chains from a
//! TOML config and writes figure-ready CSV or JSON.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 initial
//! state outside the unbroken phase.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{cmd_quench, cmd_spectrum, cmd_sweep, CliError};
use config::{apply_override, load_document, ExperimentConfig, Format};

#[derive(Parser)]
#[command(
    name = "rtchain",
    version,
    about = "Exceptional points of RT-symmetric spin chains from quench dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML config file; omitted keys take the model's reference defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Data file format (overrides `output.format`).
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,

    /// Worker threads for parallel sweep points and momentum modes.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// `key.path=value` applied to the config, repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues at `h0` and their reality classification (exact diagonalisation).
    Spectrum,
    /// Echo time series for each `h1`.
    Quench,
    /// η^T and η^S over the `sweep` grid with an EP estimate.
    Sweep,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut doc = load_document(cli.config.as_deref())?;
    for spec in &cli.overrides {
        apply_override(&mut doc, spec)?;
    }
    let mut config = ExperimentConfig::resolve(doc)?;
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    if let Some(format) = cli.format {
        config.output.format = match format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    Ok(config)
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("`--threads` must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
    }
    let config = resolve(cli)?;
    match cli.command {
        Command::Spectrum => cmd_spectrum(&config),
        Command::Quench => cmd_quench(&config),
        Command::Sweep => cmd_sweep(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rtchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
