//! Command-line front end for `memdiff-core`: kernel tables, solves, the
//! FitzHugh-Nagumo scenarios and the verification registry, written as
//! CSV (with a `#` config header) or JSONL.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use memdiff_core::Error;

mod commands;
pub mod settings;

pub use settings::{parse_flat, Settings};

#[derive(Debug, Parser)]
#[command(name = "memdiff", version, about = "Diffusion with exponential memory: kernels, solves, FitzHugh-Nagumo")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate K, K1 or K2 with error estimates and bounds.
    Kernel(KernelArgs),
    /// Solve the (possibly nonlinear) initial value problem by contraction.
    Solve(SolveArgs),
    /// FitzHugh-Nagumo scenarios: pulse, wave, steady.
    Fhn(FhnArgs),
    /// Run the verification checks over a parameter battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct Io {
    /// Flat `key = value` file applied over the defaults. Flags win over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub params: ParamArgs,
    /// K, K1, K2 or all.
    #[arg(long)]
    pub which: Option<String>,
    /// Single x; same as --x-min X --x-max X --nx 1.
    #[arg(long, allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Single t; same as --t-min T --t-max T --nt 1.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x_min: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub x_max: Option<String>,
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Write every n-th time level (the last level is always written).
    #[arg(long)]
    pub every: Option<usize>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub block_steps: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub nx: Option<usize>,
    /// Initial datum: gaussian, step, logistic, constant, or file.
    #[arg(long)]
    pub g: Option<String>,
    /// Two-column `x,u` samples on a uniform grid, used with `--g file`.
    #[arg(long)]
    pub g_file: Option<PathBuf>,
    #[arg(long)]
    pub g_amplitude: Option<f64>,
    /// Source: zero, cosine (c e^{-t} cos x) or damping (-c u).
    #[arg(long = "F", alias = "source")]
    pub source: Option<String>,
    /// The constant c of the source.
    #[arg(long)]
    pub source_coef: Option<f64>,
    /// Block length; `auto` derives it from the Lipschitz constant.
    #[arg(long)]
    pub theta: Option<String>,
}

#[derive(Debug, Args)]
pub struct FhnArgs {
    /// pulse, wave or steady.
    pub scenario: Option<String>,
    #[command(flatten)]
    pub io: Io,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub dx: Option<f64>,
    /// Height of the Gaussian initial pulse.
    #[arg(long)]
    pub amplitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub io: Io,
    /// default, degenerate or full.
    #[arg(long)]
    pub battery: Option<String>,
    /// Random samples per bound check.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Why a command stopped; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input file.
    Usage(String),
    /// Numerical or convergence failure.
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Input(_) | Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Defaults, then the config file, then the flags that were given.
pub(crate) fn resolve(
    command: &str,
    defaults: &[(&str, &str)],
    io: &Io,
    flags: &[(&str, Option<String>)],
) -> Result<Settings, Failure> {
    let mut s = Settings::new(command, defaults);
    if let Some(path) = &io.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let entries = parse_flat(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        s.overlay(&entries, &path.display().to_string()).map_err(usage)?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            s.set(k, v).map_err(usage)?;
        }
    }
    Ok(s)
}

pub(crate) fn open_out(io: &Io) -> Result<Box<dyn Write>, Failure> {
    Ok(match &io.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Kernel(a) => commands::kernel(&a),
        Command::Solve(a) => commands::solve(&a),
        Command::Fhn(a) => commands::fhn(&a),
        Command::Verify(a) => commands::verify(&a),
    }
}
