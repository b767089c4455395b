mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "convlab", version, about = "Naming-game simulations and mean-field analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Master seed; every run derives its own seed from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Defaults to csv, except `synth` which writes a JSON policy file.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    /// JSON
    StructuredText,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Number of memory states, optionally the full index table.
    States {
        #[arg(long = "H")]
        h: usize,
        #[arg(long)]
        enumerate: bool,
    },
    /// Independent runs of the finite-population game.
    Simulate(SimulateArgs),
    /// Collective bias across population sizes.
    Sweep(SweepArgs),
    /// Integrate the rate equations from the empty-memory state.
    Meanfield(MeanfieldArgs),
    /// Residuals and leading eigenvalues at both homogeneous fixed points.
    Stability {
        #[arg(long)]
        policy: PathBuf,
    },
    /// Minimal naming game with a fixed individual bias.
    Baseline(BaselineArgs),
    /// Binomial tests of observed production counts against a policy.
    Validate(ValidateArgs),
    /// Write a synthetic policy file.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long = "N")]
    pub population: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = convlab_core::sim::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: usize,
    /// Also write per-round usage fractions to this file.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    /// Also write the consensus-time histogram to this file.
    #[arg(long)]
    pub pdf: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "2,4,6,24,100,1000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = convlab_core::sim::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: usize,
}

#[derive(Args, Debug)]
pub struct MeanfieldArgs {
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,
    #[arg(long, default_value_t = 500.0)]
    pub tmax: f64,
    /// Keep every n-th integration step.
    #[arg(long, default_value_t = 1)]
    pub every: usize,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    /// One or more individual biases, comma separated.
    #[arg(long = "p", value_delimiter = ',', required = true)]
    pub bias: Vec<f64>,
    #[arg(long = "N")]
    pub population: usize,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long, default_value_t = convlab_core::sim::DEFAULT_MAX_ROUNDS)]
    pub max_rounds: usize,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub policy: PathBuf,
    /// CSV with columns state_index,observed_k,n.
    #[arg(long)]
    pub counts: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fail when any row cannot be tested.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum SynthName {
    Uniform,
    Constant,
    BiasedEmpty,
    WordSwapSymmetric,
    Random,
    Majority,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthName,
    #[arg(long = "H", default_value_t = convlab_core::DEFAULT_HISTORY_LEN)]
    pub h: usize,
    /// Probability parameter for constant, biased-empty and majority.
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CONVLAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("CONVLAB_THREADS must be an integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = configure_threads().and_then(|()| {
        let out = commands::Output {
            path: cli.out.as_deref(),
            format: cli.format,
        };
        match &cli.command {
            Command::States { h, enumerate } => commands::states(*h, *enumerate, &out),
            Command::Simulate(a) => commands::simulate(a, cli.seed, &out),
            Command::Sweep(a) => commands::sweep(a, cli.seed, &out),
            Command::Meanfield(a) => commands::meanfield(a, &out),
            Command::Stability { policy } => commands::stability(policy, &out),
            Command::Baseline(a) => commands::baseline(a, cli.seed, &out),
            Command::Validate(a) => commands::validate(a, &out),
            Command::Synth(a) => commands::synth(a, cli.seed, &out),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
