//! Command-line front end for nntlab.
//!
//! `run` parses arguments, owns the worker pool and maps outcomes to exit
//! codes: 0 success, 1 check or computation failure, 2 usage error.

pub mod checks;
pub mod commands;
pub mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nntlab_core::locallimit::{LocalMode, MIN_EXPECTED_POINTS};
use nntlab_core::spaces::Space;

use crate::output::{Format, Table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Seed used by `verify` when none is given; fixed so runs are repeatable.
pub const VERIFY_SEED: u64 = 20_240_601;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nntlab_core::Error),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nntlab", version, about = "Nearest-neighbour tree experiments")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, env = "NNTLAB_WORKERS", global = true)]
    pub workers: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv", global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpaceKind {
    Sphere,
    Torus,
    Rrt,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build random trees and report per-replicate statistics.
    Simulate(SimulateArgs),
    /// Tabulate S_d, T_plus and T_minus by quadrature.
    Quadrature(QuadratureArgs),
    /// Estimate S_d from Poisson windows on the torus.
    Locallimit(LocalLimitArgs),
    /// Run the property suite and print a pass/fail table.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub space: SpaceKind,
    /// Dimension; required for sphere and torus.
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct QuadratureArgs {
    /// A dimension, a range `a..b` (inclusive) or a list `a,b,c`.
    #[arg(long, value_parser = parse_dims)]
    pub d: DimList,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LocalLimitArgs {
    /// `torus` for the Euclidean limit, `rrt` for uniform attachment.
    #[arg(long, value_enum, default_value = "torus")]
    pub space: SpaceKind,
    #[arg(long)]
    pub d: usize,
    /// Window side length.
    #[arg(long = "L")]
    pub side: f64,
    #[arg(long, default_value_t = 1)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Reduced sample sizes; finishes in under a minute.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = VERIFY_SEED)]
    pub seed: u64,
    #[arg(long, hide = true)]
    pub corrupt_lens: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimList(pub Vec<usize>);

/// Parses `3`, `2..10`, `2..=10` or `2,3,5`; every entry must be positive.
pub fn parse_dims(s: &str) -> Result<DimList, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad dimension `{t}`: {e}"));
    let dims: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_, _>>()?
    };
    if dims.contains(&0) {
        return Err("dimension must be at least 1".into());
    }
    Ok(DimList(dims))
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn space_of(kind: SpaceKind, d: Option<usize>) -> Result<Space, CliError> {
    let need = || d.filter(|&d| d > 0).ok_or_else(|| usage("--d must be a positive integer for sphere and torus"));
    Ok(match kind {
        SpaceKind::Sphere => Space::Sphere { d: need()? },
        SpaceKind::Torus => Space::Torus { d: need()? },
        SpaceKind::Rrt => Space::Rrt,
    })
}

fn emit(cli: &Cli, table: &Table, config: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(&mut w, cli.format, config)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w, cli.format, config)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<i32, CliError> {
    let space = space_of(a.space, a.d)?;
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    if a.reps == 0 {
        return Err(usage("--reps must be positive"));
    }
    let reps = commands::simulate(space, a.n, a.reps, a.seed)?;
    emit(cli, &commands::simulate_table(space, a.n, &reps), &format!("simulate {a:?}"))?;
    Ok(EXIT_OK)
}

fn cmd_quadrature(cli: &Cli, a: &QuadratureArgs) -> Result<i32, CliError> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    if a.d.0.contains(&1) {
        eprintln!("note: d = 1 is reported from the closed form S_1 = 1 + ln 2; T_plus and T_minus are left empty");
    }
    let rows = commands::quadrature(&a.d.0, a.tol)?;
    emit(cli, &commands::quadrature_table(&rows), &format!("quadrature {a:?}"))?;
    let bad: Vec<usize> = rows.iter().filter(|r| !r.consistent).map(|r| r.d).collect();
    if !bad.is_empty() {
        return Err(CliError::Check(format!("S_d = 2 - T_plus + T_minus not within error estimates for d = {bad:?}")));
    }
    Ok(EXIT_OK)
}

fn cmd_locallimit(cli: &Cli, a: &LocalLimitArgs) -> Result<i32, CliError> {
    let mode = match a.space {
        SpaceKind::Torus => LocalMode::Euclidean,
        SpaceKind::Rrt => LocalMode::Rrt,
        SpaceKind::Sphere => return Err(usage("locallimit supports --space torus or rrt")),
    };
    if a.d == 0 {
        return Err(usage("--d must be positive"));
    }
    if !(a.side.is_finite() && a.side > 0.0) {
        return Err(usage("--L must be positive"));
    }
    if a.side.powi(a.d as i32) < MIN_EXPECTED_POINTS {
        return Err(usage(format!("--L^d must be at least {MIN_EXPECTED_POINTS}")));
    }
    if a.reps < 2 {
        return Err(usage("--reps must be at least 2 for a standard error"));
    }
    let run = commands::locallimit(mode, a.d, a.side, a.reps, a.seed)?;
    emit(cli, &commands::locallimit_table(&run), &format!("locallimit {a:?}"))?;
    if !run.agree {
        return Err(CliError::Check(format!(
            "window doubling: L gives {:.5} ± {:.5}, 2L gives {:.5} ± {:.5}",
            run.base.mean, run.base.std_error, run.doubled.mean, run.doubled.std_error
        )));
    }
    Ok(EXIT_OK)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32, CliError> {
    let scale = if a.quick { checks::Scale::Quick } else { checks::Scale::Full };
    let outcomes = checks::run_all(scale, a.seed, a.corrupt_lens);
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for o in &outcomes {
        writeln!(w, "{}", o.line())?;
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    writeln!(w, "{passed}/{} checks passed", outcomes.len())?;
    Ok(if passed == outcomes.len() { EXIT_OK } else { EXIT_FAILURE })
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(usage("--workers must be positive"));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build().map_err(|e| CliError::Check(format!("worker pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Quadrature(a) => cmd_quadrature(cli, a),
        Command::Locallimit(a) => cmd_locallimit(cli, a),
        Command::Verify(a) => cmd_verify(a),
    })
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("nntlab: {e}");
            e.exit_code()
        }
    }
}
