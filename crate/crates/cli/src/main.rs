//! Command-line driver: synthetic data, learning, inference, likelihood bounds and MAP.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mle_struct::Error;

#[derive(Parser, Debug)]
#[command(
    name = "mle-struct",
    version,
    about = "Approximate MLE for matchings and binary pairwise models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw exact samples from a synthetic matching model.
    Synth(Common),
    /// Learn parameters with Frank-Wolfe.
    Learn(Common),
    /// Approximate marginals and log-partition function at fixed parameters.
    Infer(Common),
    /// Bracket the exact likelihood between the Bethe and reweighted ones.
    Sandwich(Common),
    /// Decode MAP structures and their Hamming loss.
    Map(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory (default: configured `out`, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    /// Some checked inequality failed; the report has been written.
    ChecksFailed(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ChecksFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

fn core_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible(_) => 3,
        Error::InvariantViolation(_) => 4,
        Error::Solver { source, .. } => core_code(source),
        Error::InvalidParameter(_)
        | Error::SizeCap(_)
        | Error::Structure(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => core_code(e),
            CliError::ChecksFailed(_) => 4,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (Command::Synth(common)
    | Command::Learn(common)
    | Command::Infer(common)
    | Command::Sandwich(common)
    | Command::Map(common)) = &cli.command;
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    let ctx = commands::Context::new(common)?;
    match cli.command {
        Command::Synth(_) => commands::synth(&ctx),
        Command::Learn(_) => commands::learn(&ctx),
        Command::Infer(_) => commands::infer(&ctx),
        Command::Sandwich(_) => commands::sandwich(&ctx),
        Command::Map(_) => commands::map(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mle-struct: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
