//! Batch experiment runner: one subcommand per operation, JSON configs in,
//! CSV or JSON reports out.
//!
//! Exit codes: 0 pass, 1 statistical gate failed, 2 config error,
//! 3 quadrature resolution, 4 blocking schedule, 5 degenerate variance.

mod commands;
mod config;

pub use commands::{random_directions, Outcome};
pub use config::{ExperimentConfig, ScheduleConfig};

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::lattice::Shape;

#[derive(Debug, Parser)]
#[command(name = "mixlab", version, about = "Monte Carlo laboratory for limit theorems of mixing random fields")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the replication count.
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Override the shape, e.g. `128x128`.
    #[arg(long, global = true)]
    pub shape: Option<String>,
    /// Output path; `-` writes to stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Exact variance vs. Fejér-kernel quadrature per shape (CSV).
    Fejer,
    /// Blocking schedule, small-block ratio and decomposition check (JSON).
    Blocking,
    /// Exact and Monte Carlo variance along a shape sequence (JSON).
    Variance,
    /// Scalar normality test of the normalized sum (JSON).
    Clt,
    /// Covariance estimate, polarization and Cramér–Wold directions (JSON).
    Cov,
    /// Tail second-moment profile of a truncated Hilbert field (JSON).
    Tightness,
    /// One realization, or an ensemble of normalized sums with `--reps` (CSV).
    Gen,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_STAT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_QUADRATURE: i32 = 3;
pub const EXIT_BLOCKING: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::QuadratureResolution { .. } => EXIT_QUADRATURE,
        Error::Blocking(_) | Error::MixingHypothesis { .. } => EXIT_BLOCKING,
        Error::Degenerate(_) => EXIT_DEGENERATE,
        _ => EXIT_CONFIG,
    }
}

/// Loads the config and applies command-line overrides.
pub fn load_config(args: &Args) -> crate::Result<ExperimentConfig> {
    let path = args
        .config
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(reps) = args.reps {
        cfg.reps = Some(reps);
    }
    if let Some(shape) = &args.shape {
        let shape = Shape::parse(shape)?;
        if shape.dim() != cfg.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.spec.dim(),
                got: shape.dim(),
            });
        }
        cfg.shape = Some(shape);
        cfg.shapes = None;
        cfg.shape_schedule = None;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    Ok(cfg)
}

pub fn run_command(command: Command, cfg: &ExperimentConfig) -> crate::Result<Outcome> {
    match command {
        Command::Fejer => commands::fejer(cfg),
        Command::Blocking => commands::blocking(cfg),
        Command::Variance => commands::variance(cfg),
        Command::Clt => commands::clt(cfg),
        Command::Cov => commands::cov(cfg),
        Command::Tightness => commands::tightness(cfg),
        Command::Gen => commands::gen(cfg),
    }
}

fn write_output(target: Option<&str>, text: &str) -> std::io::Result<()> {
    match target {
        None | Some("-") => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
        Some(path) => std::fs::write(path, text),
    }
}

/// Entry point of the `mixlab` binary; returns the process exit code.
pub fn main() -> i32 {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("mixlab: {e}");
            return EXIT_CONFIG;
        }
    }
    let result = load_config(&args).and_then(|cfg| Ok((run_command(args.command, &cfg)?, cfg)));
    match result {
        Ok((outcome, cfg)) => {
            if let Err(e) = write_output(cfg.out.as_deref(), &outcome.text) {
                eprintln!("mixlab: writing output: {e}");
                return EXIT_CONFIG;
            }
            if outcome.passed {
                EXIT_PASS
            } else {
                eprintln!("mixlab: statistical check failed");
                EXIT_STAT_FAIL
            }
        }
        Err(e) => {
            eprintln!("mixlab: {e}");
            exit_code(&e)
        }
    }
}
