use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use proxsgd::data::records::records_to_string;
use proxsgd::runner::trajectory_csv_string;
use proxsgd::verify::{render_summary, reports_to_csv};

use crate::commands::{cmd_grid, cmd_optimal_b, cmd_run, cmd_verify, run_summary};
use crate::config::{Algo, ExperimentConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "proxsgd", version, about = "Proximal stochastic gradient experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve once and write the trajectory CSV.
    Run(Flags),
    /// Total gradient evaluations over a grid of batch sizes.
    Grid(Flags),
    /// Theory-optimal batch size and the predicted complexity curve.
    OptimalB(Flags),
    /// Certify the estimator constants on small instances.
    Verify(Flags),
}

/// Flags override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for the grid.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long)]
    pub b: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long = "eps-rel")]
    pub eps_rel: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<u64>,
}

impl Flags {
    pub fn resolve(&self, required: bool) -> CliResult<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None if required => return Err(CliError::config("--config is required")),
            None => ExperimentConfig::default(),
        };
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        if self.algo.is_some() {
            cfg.algo = self.algo;
        }
        if self.b.is_some() {
            cfg.b = self.b;
        }
        if self.gamma.is_some() {
            cfg.gamma = self.gamma;
            cfg.gamma0_inv_sqrt = None;
        }
        if self.eps_rel.is_some() {
            cfg.eps_rel = self.eps_rel;
        }
        if self.max_iters.is_some() {
            cfg.max_iters = self.max_iters;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::data(format!("{}: {e}", path.display()))),
        None => Ok(io::stdout().write_all(text.as_bytes())?),
    }
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run(flags) => {
            let cfg = flags.resolve(true)?;
            let t = cmd_run(&cfg)?;
            emit(cfg.out.as_deref(), &trajectory_csv_string(&t)?)?;
            eprint!("{}", run_summary(&t));
        }
        Command::Grid(flags) => {
            let cfg = flags.resolve(true)?;
            let g = cmd_grid(&cfg, flags.jobs)?;
            let csv = records_to_string(&g.records)?;
            match cfg.out.as_deref() {
                Some(path) => {
                    emit(Some(path), &csv)?;
                    print!("{}", g.summary());
                }
                None => {
                    emit(None, &csv)?;
                    eprint!("{}", g.summary());
                }
            }
        }
        Command::OptimalB(flags) => {
            let cfg = flags.resolve(true)?;
            let r = cmd_optimal_b(&cfg)?;
            print!("{}", r.summary());
            match cfg.out.as_deref() {
                Some(path) => emit(Some(path), &r.curve_csv())?,
                None => print!("{}", r.curve_csv()),
            }
        }
        Command::Verify(flags) => {
            let cfg = flags.resolve(false)?;
            let reports = cmd_verify(&cfg)?;
            if let Some(path) = cfg.out.as_deref() {
                emit(Some(path), &reports_to_csv(&reports)?)?;
            }
            print!("{}", render_summary(&reports));
            let failed = reports.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(CliError::Verify(format!("{failed} of {} checks failed", reports.len())));
            }
        }
    }
    Ok(())
}
