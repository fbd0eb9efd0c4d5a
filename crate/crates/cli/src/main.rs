//! `bihm`: training, evaluation, distance tables, error exponents and self-checks.

mod commands;
mod config;
mod fetch;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_MISSING_DATA: u8 = 3;
pub const EXIT_CHECK_FAILED: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("data directory not found: {0}")]
    MissingData(PathBuf),
    #[error("{0} invariant(s) violated")]
    CheckFailed(usize),
    #[error(transparent)]
    Core(#[from] helmholtz::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("download: {0}")]
    Fetch(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_USAGE,
            CliError::MissingData(_) => EXIT_MISSING_DATA,
            CliError::CheckFailed(_) => EXIT_CHECK_FAILED,
            _ => EXIT_FAILURE,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bihm", version, about = "Generalized bidirectional Helmholtz machines")]
struct Cli {
    /// Caps the worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by `train` and `eval`; each overrides the config file.
#[derive(Args, Debug, Default)]
pub struct RunArgs {
    /// `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated layer sizes, visible first.
    #[arg(long)]
    pub layers: Option<String>,
    /// elbo | bhattacharyya | tempered:t | resistor | chernoff-approx[:alpha]
    #[arg(long)]
    pub objective: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// threshold[:level] | stochastic:seed
    #[arg(long)]
    pub binarization: Option<String>,
    /// Keep the first N examples of each split.
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long)]
    pub eval_every: Option<usize>,
    #[arg(long)]
    pub eval_particles: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model; writes metrics, checkpoint and the resolved config under --out.
    Train(RunArgs),
    /// Mean NLL of a checkpoint on one split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// train | valid | test
        #[arg(long, default_value = "valid")]
        split: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// All distances between two distributions as one JSON line.
    Distances {
        /// Comma-separated probabilities or `bern:p`.
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
    },
    /// `(t, −log Z(t))` CSV on an even grid.
    Curve {
        #[arg(long)]
        p: String,
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 101)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact error exponents over a grid of sample sizes, as CSV.
    Stein {
        /// Null hypothesis.
        #[arg(long)]
        p: String,
        /// Alternative hypothesis.
        #[arg(long)]
        q: String,
        #[arg(long, default_value = "100,500,2000")]
        n_grid: String,
        #[arg(long, default_value_t = 0.2)]
        beta: f64,
        #[arg(long, default_value_t = 0.5)]
        prior: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Checks every estimator against exact enumeration on tiny models.
    OracleCheck {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Perturbs analytic gradients; the gradient checks must then fail.
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
    /// Downloads the four MNIST files and verifies their SHA-256 digests.
    FetchMnist {
        #[arg(long, default_value = "data/mnist")]
        data_dir: PathBuf,
        #[arg(long, default_value = fetch::DEFAULT_BASE_URL)]
        base_url: String,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Train(args) => commands::train(&args),
        Command::Eval { checkpoint, split, run } => commands::eval(&checkpoint, &split, &run),
        Command::Distances { p, q, alpha } => commands::distances(&p, &q, alpha),
        Command::Curve { p, q, n, out } => commands::curve(&p, &q, n, out.as_deref()),
        Command::Stein {
            p,
            q,
            n_grid,
            beta,
            prior,
            out,
        } => commands::stein(&p, &q, &n_grid, beta, prior, out.as_deref()),
        Command::OracleCheck { seed, corrupt_gradient } => commands::oracle_check(seed, corrupt_gradient),
        Command::FetchMnist { data_dir, base_url } => fetch::fetch_mnist(&data_dir, &base_url),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
