#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Output, Summary};
use crate::config::{parse_grid, Overrides, RunConfig};
use crate::error::CliError;

/// Numerical experiments for p-Laplace type equations with a boundary singularity.
#[derive(Parser)]
#[command(name = "bhlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Separable exponents and angular profiles over a parameter sweep.
    Exponent(Common),
    /// One Dirichlet solve on a truncated sector.
    Solve(Common),
    /// Truncation ladder, singular limit, blow-up profile and classification.
    Singular(Common),
    /// Harnack-type constants measured on one or two field files.
    Harnack(HarnackArgs),
    /// Lower and upper barrier certification.
    Barrier(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    dim: Option<u32>,
    #[arg(long)]
    opening: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// `nr,ntheta`; for `singular`, `nr` is the number of rings per octave.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct HarnackArgs {
    #[command(flatten)]
    common: Common,
    /// Field CSV file; give once or twice. Appended to the configured list.
    #[arg(long = "field")]
    fields: Vec<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            p: self.p,
            dim: self.dim,
            opening: self.opening,
            c: self.c,
            epsilon: self.epsilon,
            grid: self.grid,
            out: self.out.clone(),
        }
    }
}

fn configure(name: &str, common: &Common, fields: &[PathBuf]) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    cfg.apply(&common.overrides());
    cfg.command = name.to_string();
    cfg.harnack.fields.extend(fields.iter().cloned());
    cfg.validate()?;
    Ok(cfg)
}

fn run(cfg: &RunConfig, hash: &str) -> Result<(), CliError> {
    let out = Output::new(&cfg.out, hash);
    out.text("config.toml", &cfg.canonical_toml())?;
    let summary: Summary = match cfg.command.as_str() {
        "exponent" => commands::exponent(cfg, &out)?,
        "solve" => commands::solve(cfg, &out)?,
        "singular" => commands::singular(cfg, &out)?,
        "harnack" => commands::harnack(cfg, &out)?,
        _ => commands::barrier(cfg, &out)?,
    };
    if summary.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check {
            module: summary.module,
            message: summary.failures.join("; "),
        })
    }
}

fn fail(e: &CliError, hash: Option<&str>) -> ExitCode {
    eprintln!("{}", e.to_json(hash));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common, fields) = match &cli.command {
        Command::Exponent(c) => ("exponent", c, &[][..]),
        Command::Solve(c) => ("solve", c, &[][..]),
        Command::Singular(c) => ("singular", c, &[][..]),
        Command::Harnack(h) => ("harnack", &h.common, &h.fields[..]),
        Command::Barrier(c) => ("barrier", c, &[][..]),
    };
    let cfg = match configure(name, common, fields) {
        Ok(cfg) => cfg,
        Err(e) => return fail(&e, None),
    };
    let hash = cfg.hash();
    match run(&cfg, &hash) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e, Some(&hash)),
    }
}
