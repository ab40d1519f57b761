//! `ltfnoise`: exact values, estimates, bounds, proof checks and searches for
//! the noise sensitivity of weighted majority functions.

mod commands;
mod parse;
mod record;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Cap(String),
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Cap(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

impl From<ltfnoise_core::Error> for CliError {
    fn from(e: ltfnoise_core::Error) -> Self {
        use ltfnoise_core::Error as E;
        match &e {
            E::EnumerationCap { .. } => CliError::Cap(format!(
                "{e}; for integer weights try --engine dp, otherwise the mc command"
            )),
            E::WeightCap { .. } => CliError::Cap(format!(
                "{e}; try --engine enum for small n, raise --dp-cap, or use the mc command"
            )),
            E::Cap { .. } => CliError::Cap(format!("{e}; reduce the instance or use the mc command")),
            E::CounterExample(_) => CliError::Verification(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ltfnoise", version, about = "Noise sensitivity of weighted majority functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Leave out the timing sidecar so equal runs give identical bytes.
    #[arg(long, global = true)]
    compare: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact p_eps by enumeration or dynamic programming.
    Exact(ExactArgs),
    /// Paired Monte Carlo estimate of p_eps with a Wilson interval.
    Mc(McArgs),
    /// Closed-form bounds and limits at (n, eps).
    Bounds(BoundsArgs),
    /// Run the proof-check suite; exit status 3 on any failed check.
    Verify(VerifyArgs),
    /// Search integer weights for the largest p_eps.
    Search(SearchArgs),
    /// Monte Carlo estimates over an epsilon grid, as CSV.
    Sweep(SweepArgs),
    /// p_eps / sqrt(eps) and p_eps over the arccos limit along a grid, as CSV.
    RatioCurve(RatioArgs),
}

#[derive(Debug, Args)]
struct InstanceArgs {
    /// Weights: inline list (`1,2,3`), `@file`, or a file with one number per line.
    #[arg(short = 'w', long, allow_hyphen_values = true, conflicts_with = "simple_majority")]
    weights: Option<String>,
    /// Unit weights on N coordinates.
    #[arg(long, value_name = "N")]
    simple_majority: Option<usize>,
    #[arg(short = 't', long, default_value_t = 0.0, allow_hyphen_values = true)]
    threshold: f64,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Flip probability: decimal, or `p/q` for exact arithmetic.
    #[arg(short = 'e', long)]
    epsilon: String,
    /// Treat a decimal epsilon as the exact fraction it spells.
    #[arg(long)]
    rational: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EngineArg {
    Enum,
    Dp,
    Auto,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, value_enum, default_value_t = EngineArg::Auto)]
    engine: EngineArg,
    /// Largest n for enumeration.
    #[arg(long, default_value_t = 13)]
    enum_cap: usize,
    /// Largest sum of |w_i| for the dp.
    #[arg(long, default_value_t = 2000)]
    dp_cap: u64,
    #[arg(long, env = "LTFNOISE_THREADS", default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[arg(short = 's', long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "LTFNOISE_THREADS", default_value_t = 1)]
    workers: usize,
    /// Confidence level of the Wilson interval.
    #[arg(long, default_value_t = 0.99)]
    level: f64,
}

#[derive(Debug, Args)]
struct McArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Bit-parallel path for unit weights; eps is rounded down to a multiple of 2^-32.
    #[arg(long)]
    fast_path: bool,
    /// Draw flip decisions from shared words, as the fast path does.
    #[arg(long)]
    shared_words: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(short = 'n', long)]
    n: u64,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Pointwise identity on the half-integer grid in [-3, 3]^2.
    #[arg(long)]
    keypoint_grid: bool,
    /// Pointwise identity on this many random pairs.
    #[arg(long, value_name = "DRAWS")]
    keypoint_random: Option<u64>,
    /// Law of the partition labels.
    #[arg(long, value_name = "DRAWS")]
    partition_law: Option<u64>,
    /// Law of Y_1 - S_1 given x.
    #[arg(long, value_name = "DRAWS")]
    setup_law: Option<u64>,
    /// Partition average against exact p.
    #[arg(long, value_name = "DRAWS")]
    tight: Option<u64>,
    /// Partition average by full enumeration of (x, tau).
    #[arg(long)]
    tight_exact: bool,
    /// Pointwise inequality on this many random traces.
    #[arg(long, value_name = "DRAWS")]
    pointwise: Option<u64>,
    /// E|B_lambda - #lambda/2| <= E|B_m - m/2|.
    #[arg(long, value_name = "DRAWS")]
    averaging: Option<u64>,
    /// E|B_l - l/2| nondecreasing up to this l.
    #[arg(long, value_name = "L")]
    mad: Option<u64>,
    /// Exact p against the refined bound on this many random instances.
    #[arg(long, value_name = "INSTANCES")]
    chain: Option<u64>,
    #[arg(long, default_value_t = 0x5EED)]
    seed: u64,
    #[arg(long, env = "LTFNOISE_THREADS", default_value_t = 1)]
    workers: usize,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(short = 'n', long)]
    n: usize,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Largest weight in the exhaustive search.
    #[arg(long, default_value_t = 3)]
    cap: i64,
    /// Also try thresholds 1/2, 3/2, ... in the exhaustive search.
    #[arg(long)]
    half_thresholds: bool,
    /// Random-restart local search instead of exhaustive search.
    #[arg(long)]
    local: bool,
    #[arg(long, default_value_t = 20)]
    restarts: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Score local-search candidates by Monte Carlo with this many samples.
    #[arg(long, value_name = "SAMPLES")]
    mc_samples: Option<u64>,
    #[arg(long, default_value_t = 50)]
    max_passes: usize,
    #[arg(long, env = "LTFNOISE_THREADS", default_value_t = 1)]
    workers: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Grid: `a,b,c`, `start:stop:log10[:per_decade]` or `start:stop:lin[:count]`.
    #[arg(long = "eps", value_name = "GRID")]
    eps: String,
    #[arg(short = 's', long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "LTFNOISE_THREADS", default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = 0.99)]
    level: f64,
    /// Bit-parallel path (unit weights only).
    #[arg(long)]
    fast_path: bool,
    /// Emit a JSON run record instead of CSV.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct RatioArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long = "eps", value_name = "GRID")]
    eps: String,
    /// Monte Carlo samples when the dp is too expensive.
    #[arg(short = 's', long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// What a command produced: text to write and whether checks failed.
pub struct Output {
    pub text: String,
    pub failure: Option<String>,
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let compare = cli.compare;
    match cli.command {
        Command::Exact(a) => commands::exact(a, compare),
        Command::Mc(a) => commands::mc(a, compare),
        Command::Bounds(a) => commands::bounds(a, compare),
        Command::Verify(a) => commands::verify(a, compare),
        Command::Search(a) => commands::search(a, compare),
        Command::Sweep(a) => commands::sweep(a, compare),
        Command::RatioCurve(a) => commands::ratio_curve(a),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let out = cli.out.clone();
    match run(cli) {
        Ok(output) => {
            if let Err(e) = emit(&output.text, out.as_ref()) {
                eprintln!("error: cannot write output: {e}");
                return ExitCode::from(1);
            }
            match output.failure {
                Some(message) => {
                    eprintln!("verification failed: {message}");
                    ExitCode::from(3)
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
