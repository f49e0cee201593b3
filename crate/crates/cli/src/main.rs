//! `decayrank`: decayed-frequency ranking and walk analytics from the shell.
//!
//! Every successful run prints one JSON document with a `manifest` block (the
//! resolved parameters, seed, version, and timestamp) and a `data` block (the
//! result). `--format csv` flattens the same content into key,value rows.
//! Floats in reports carry 12 significant digits; state files written with
//! `rank --state-out` keep full precision.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input data, 2 usage
//! errors, 3 one or more verification checks failed.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use decayrank::analytics::Horizon;

/// Process-level failure classes, one per nonzero exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unreadable input, unwritable output, or malformed data files. Exit 1.
    Io(String),
    /// An argument outside its domain or a refused resource budget. Exit 2.
    Usage(String),
    /// The verification suite found failing checks (the count). Exit 3.
    Verification(usize),
}

impl From<decayrank::Error> for CliError {
    fn from(e: decayrank::Error) -> Self {
        match e {
            decayrank::Error::Format(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "decayrank",
    version,
    about = "Stream ranking by exponentially decayed frequency, with the \
             closed-form analytics of the underlying random walk",
    propagate_version = true
)]
pub struct Cli {
    /// Report format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write the report to this file instead of standard output
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Rank items of an event stream by exponentially decayed frequency
    Rank(RankArgs),
    /// Sample the vertex walk, or enumerate it exactly
    Simulate(SimulateArgs),
    /// Central moments of the limiting scalar law
    Moments(MomentsArgs),
    /// Eigenvalues of the covariance kernel, optionally the full covariance
    Eigen(EigenArgs),
    /// Deviation bounds and the relative-error threshold
    Bounds(BoundsArgs),
    /// Ranking boost of a recent event window over an older one
    Boost(BoostArgs),
    /// Cross-validate every closed form against an independent route
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(group(
    ArgGroup::new("decay").required(true).args(["alpha", "half_life", "state_in"])
))]
pub struct RankArgs {
    /// Event stream file, one item token per line; "-" or omitted reads stdin
    #[arg(value_name = "STREAM")]
    pub input: Option<PathBuf>,

    /// Per-event retention factor, in (0, 1)
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Events for an idle item's probability to halve (alternative to --alpha)
    #[arg(long)]
    pub half_life: Option<f64>,

    /// Comma-separated item universe, started uniform; other items still
    /// enter at first sight with zero prior mass
    #[arg(long, value_delimiter = ',', conflicts_with = "state_in")]
    pub items: Option<Vec<String>>,

    /// Number of top items per report
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,

    /// Also emit a report every N events
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    pub snapshot_every: Option<u64>,

    /// Resume from a state file written by --state-out (carries the decay
    /// parameters, so --alpha / --half-life / --items must not be given)
    #[arg(long, value_name = "FILE")]
    pub state_in: Option<PathBuf>,

    /// Write the final table state to this file, full precision
    #[arg(long, value_name = "FILE")]
    pub state_out: Option<PathBuf>,

    /// Drop items whose probability falls below this floor
    #[arg(long, value_name = "P")]
    pub eviction_floor: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Simplex,
    Complex,
    RealVectors,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Full walk configuration as JSON (alpha, q, vertices, start, steps,
    /// paths, seed); exclusive with the inline flags
    #[arg(
        long,
        value_name = "FILE",
        conflicts_with_all = ["alpha", "mode", "q", "points", "columns", "y0", "steps", "paths", "seed"]
    )]
    pub config: Option<PathBuf>,

    /// Per-step retention factor, in (0, 1)
    #[arg(long, default_value_t = 0.9)]
    pub alpha: f64,

    /// Comma-separated event distribution over the vertices
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,

    /// Vertex geometry for inline runs
    #[arg(long, value_enum, default_value_t = Mode::Simplex)]
    pub mode: Mode,

    /// Complex vertices as "re,im;re,im;..."; defaults to the roots of unity
    #[arg(long, value_name = "POINTS")]
    pub points: Option<String>,

    /// Real vertex columns as "x1,x2,...;y1,y2,...", one column per vertex
    #[arg(long, value_name = "COLS")]
    pub columns: Option<String>,

    /// Start point: a comma vector, or "re,im" for a complex walk; defaults
    /// to the uniform simplex center / the vertex centroid
    #[arg(long, value_name = "Y0", value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,

    /// Steps per path
    #[arg(long)]
    pub steps: Option<u32>,

    /// Monte Carlo path count
    #[arg(long, default_value_t = 10_000)]
    pub paths: u64,

    /// RNG seed; a fixed seed gives bit-identical samples
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Enumerate every vertex sequence exactly instead of sampling
    #[arg(long)]
    pub exact: bool,

    /// Report central moments up to this order (exact route: at most 8)
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,

    /// Include the full support atoms in an --exact report
    #[arg(long, requires = "exact")]
    pub support: bool,
}

#[derive(Args)]
pub struct MomentsArgs {
    /// Retention factor, in (0, 1)
    #[arg(long)]
    pub alpha: f64,

    /// Event probability of the tracked item, in [0, 1]
    #[arg(long)]
    pub q: f64,

    /// Highest central moment order
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(2..=64))]
    pub order: u64,

    /// Include the reflection-symmetry residuals across q and 1 - q
    #[arg(long)]
    pub symmetry: bool,

    /// Include the n-th root trend toward 1 - q (needs q <= 1/2)
    #[arg(long)]
    pub trend: bool,
}

#[derive(Args)]
pub struct EigenArgs {
    /// Comma-separated event distribution (distinct entries in (0, 1))
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,

    /// Retention factor; adds the scaled covariance matrix and its spectrum
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Horizon in steps, or "infinite"
    #[arg(long, default_value = "infinite", value_parser = parse_horizon)]
    pub t: Horizon,
}

#[derive(Args)]
pub struct BoundsArgs {
    /// Retention factor, in (0, 1)
    #[arg(long)]
    pub alpha: f64,

    /// Comma-separated event probabilities (a full distribution adds the
    /// summed vector bound)
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,

    /// Deviation threshold, > 0
    #[arg(long)]
    pub eps: f64,

    /// Horizon in steps, or "infinite"
    #[arg(long, default_value = "infinite", value_parser = parse_horizon)]
    pub t: Horizon,

    /// Older window length for the boost ratio (with --t2)
    #[arg(long, requires = "t2")]
    pub t1: Option<u64>,

    /// Newer window length for the boost ratio (with --t1)
    #[arg(long, requires = "t1")]
    pub t2: Option<u64>,
}

#[derive(Args)]
pub struct BoostArgs {
    /// Retention factor, in (0, 1)
    #[arg(long)]
    pub alpha: f64,

    /// Older window length, in events
    #[arg(long)]
    pub t1: u64,

    /// Newer window length, in events
    #[arg(long)]
    pub t2: u64,

    /// Start distribution for an optional two-phase mean (with --phase1,
    /// --phase2)
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<f64>>,

    /// Event distribution over the older window
    #[arg(long, value_delimiter = ',')]
    pub phase1: Option<Vec<f64>>,

    /// Event distribution over the newer window
    #[arg(long, value_delimiter = ',')]
    pub phase2: Option<Vec<f64>>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BudgetArg {
    /// Reduced path counts, for interactive runs
    Quick,
    /// The counts the acceptance gates are stated for
    Full,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Sampling budget for the cross-validation suite
    #[arg(long, value_enum, default_value_t = BudgetArg::Quick)]
    pub budget: BudgetArg,
}

fn parse_horizon(s: &str) -> Result<Horizon, String> {
    s.parse::<Horizon>().map_err(|e| e.to_string())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let outcome = match &cli.command {
        Command::Rank(a) => commands::rank(a)?,
        Command::Simulate(a) => commands::simulate(a)?,
        Command::Moments(a) => commands::moments(a)?,
        Command::Eigen(a) => commands::eigen(a)?,
        Command::Bounds(a) => commands::bounds(a)?,
        Command::Boost(a) => commands::boost(a)?,
        Command::Verify(a) => commands::verify(a)?,
    };

    let text = match cli.format {
        Format::Json => report::render_json(&outcome.manifest, &outcome.data)?,
        Format::Csv => report::render_csv(&outcome.manifest, &outcome.data)?,
    };
    report::emit(&text, cli.output.as_deref())?;

    if outcome.failed_checks > 0 {
        return Err(CliError::Verification(outcome.failed_checks));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Verification(n)) => {
            eprintln!("error: {n} verification check(s) failed");
            ExitCode::from(3)
        }
    }
}
