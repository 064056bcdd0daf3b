//! Command-line front end for the photonic accelerator simulator.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::{parse_grid, parse_range, RunConfig};
use crate::error::{CliError, CliResult};

/// Simulator and design-space explorer for a microring-based photonic
/// DNN accelerator.
#[derive(Parser)]
#[command(name = "photosim", version, about)]
struct Cli {
    /// Bound the worker thread count for parallel evaluation.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Evaluate one model on one configuration and emit a metrics report.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Model description file; defaults to the first `models` entry.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep (N, K, n, m) candidates and select the best configuration.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Grid file with candidate lists for N, K, n, m.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate achievable resolution across WDM channel counts.
    Resolution {
        #[arg(long)]
        config: PathBuf,
        /// Channel counts: a single value or an inclusive range "1..15".
        #[arg(long, default_value = "1..15")]
        channels: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare collective vs per-device tuning power across ring pitches.
    Ted {
        #[arg(long)]
        config: PathBuf,
        /// Pitches in μm: a single value or an inclusive range "1..20".
        #[arg(long, default_value = "1..20")]
        pitch: String,
        /// Rings in the bank under test.
        #[arg(long, default_value_t = 10)]
        mrs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the four architecture variants on a model suite.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated model files; defaults to the `models` list.
        #[arg(long, value_delimiter = ',')]
        models: Vec<PathBuf>,
        /// Drift samples averaged per variant.
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Other(format!("worker pool: {e}")));
            match pool {
                Ok(pool) => pool.install(|| dispatch(cli.command)),
                Err(e) => Err(e),
            }
        }
        None => dispatch(cli.command),
    };
    if let Err(e) = outcome {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}

fn dispatch(command: Commands) -> CliResult<()> {
    match command {
        Commands::Simulate { config, model, out } => {
            let run = RunConfig::parse(&config)?;
            let model_path = match model {
                Some(path) => path,
                None => run.models.first().cloned().ok_or_else(|| {
                    CliError::Config(
                        "simulate needs --model or a `models` entry in the run config".into(),
                    )
                })?,
            };
            let out = out.unwrap_or_else(|| run.output_dir.clone());
            commands::simulate(&run, &model_path, &out)
        }
        Commands::Sweep { config, grid, out } => {
            let run = RunConfig::parse(&config)?;
            let grid = parse_grid(&grid)?;
            let out = out.unwrap_or_else(|| run.output_dir.clone());
            commands::sweep(&run, &grid, &out)
        }
        Commands::Resolution {
            config,
            channels,
            out,
        } => {
            let run = RunConfig::parse(&config)?;
            let channels = parse_range(&channels)?;
            let out = out.unwrap_or_else(|| run.output_dir.clone());
            commands::resolution_table(&run, &channels, &out)
        }
        Commands::Ted {
            config,
            pitch,
            mrs,
            out,
        } => {
            let run = RunConfig::parse(&config)?;
            let pitches = parse_range(&pitch)?;
            let out = out.unwrap_or_else(|| run.output_dir.clone());
            commands::ted_table(&run, &pitches, mrs, &out)
        }
        Commands::Compare {
            config,
            models,
            seeds,
            out,
        } => {
            let run = RunConfig::parse(&config)?;
            let out = out.unwrap_or_else(|| run.output_dir.clone());
            commands::compare(&run, &models, seeds, &out)
        }
    }
}
