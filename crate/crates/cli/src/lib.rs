//! Configuration, orchestration and persistence for exciton control experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Overrides;
use config::RunConfig;
use error::{CliError, CliResult};

/// Environment variable setting the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "EXCITON_WORKERS";

#[derive(Debug, Parser)]
#[command(
    name = "excitonctl",
    version,
    about = "Shaped-pulse control of excitonic states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one target and export the optimal pulse.
    Optimize(CommonArgs),
    /// Optimize every listed target under all constraint combinations.
    Ablation(CommonArgs),
    /// Optimize one target across a bath-parameter grid.
    Sweep(CommonArgs),
    /// Pump-probe spectra, beat analysis and novelty of a pump.
    PumpProbe(CommonArgs),
    /// Check a config without running anything.
    Validate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Full evaluation budgets and sample counts.
    #[arg(long)]
    pub paper_scale: bool,
    /// Validate and print the evaluation budget without propagating.
    #[arg(long)]
    pub dry_run: bool,
}

impl CommonArgs {
    pub fn load(&self) -> CliResult<RunConfig> {
        let overrides = Overrides {
            out: self.out.clone(),
            seed: self.seed,
            paper_scale: self.paper_scale,
        };
        Ok(overrides.apply(RunConfig::load(&self.config)?))
    }
}

fn workers(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::config(WORKERS_ENV, format!("not a count: `{v}`"))),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let (verb, args) = match &cli.command {
        Command::Optimize(a) => ("optimize", a),
        Command::Ablation(a) => ("ablation", a),
        Command::Sweep(a) => ("sweep", a),
        Command::PumpProbe(a) => ("pump-probe", a),
        Command::Validate(a) => ("validate", a),
    };
    if let Some(n) = workers(args.workers)? {
        if n == 0 {
            return Err(CliError::config("workers", "must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    let config = args.load()?;
    let manifest = match verb {
        "optimize" => commands::cmd_optimize(&config, args.dry_run)?,
        "ablation" => commands::cmd_ablation(&config, args.dry_run)?,
        "sweep" => commands::cmd_sweep(&config, args.dry_run)?,
        "pump-probe" => commands::cmd_pump_probe(&config, args.dry_run)?,
        _ => {
            println!("{}", commands::cmd_validate(&config)?);
            None
        }
    };
    if let Some(m) = manifest {
        println!(
            "wrote {} files to {} (manifest {})",
            m.files.len() + 1,
            config.output_dir.display(),
            m.manifest_hash
        );
    }
    Ok(())
}

pub fn main_exit() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
