//! Config-driven front end for the `facilitrans` simulator.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::commands::Invocation;
use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("dynamics failure: {0}")]
    Dynamics(#[from] facilitrans::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for configuration problems, 3 for anything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Dynamics(_) | Self::Output(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "facilitrans", version, about = "Facilitated transport in Rydberg chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one schedule and write trajectory.csv, result.json and heatmap.svg.
    Simulate(CommonArgs),
    /// Turn a route into a pulse schedule (schedule.json).
    Plan(CommonArgs),
    /// Evaluate the objective on a grid (surface.csv).
    Scan(CommonArgs),
    /// Grid scan followed by Nelder-Mead refinement.
    Optimize(CommonArgs),
    /// Average over seeded position-disorder realizations.
    Disorder(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory (default: the config's output_dir, else ./out).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all available cores.
    #[arg(long, env = "FACILITRANS_WORKERS", default_value_t = 0)]
    pub workers: usize,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub no_svg: bool,
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Self::Simulate(a) | Self::Plan(a) | Self::Scan(a) | Self::Optimize(a) | Self::Disorder(a) => a,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let args = cli.command.args();
    let mut config = RunConfig::load(&args.config)?;
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let out = args.out.clone().or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let inv = Invocation { workers: args.workers, svg: !args.no_svg };
    match &cli.command {
        Command::Simulate(_) => commands::simulate(&config, &out, &inv),
        Command::Plan(_) => commands::plan(&config, &out),
        Command::Scan(_) => commands::scan_cmd(&config, &out, &inv),
        Command::Optimize(_) => commands::optimize_cmd(&config, &out, &inv),
        Command::Disorder(_) => commands::disorder_cmd(&config, &out, &inv),
    }
}
