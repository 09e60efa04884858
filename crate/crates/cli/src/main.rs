//! `graph-ising`: dataset generation, training, evaluation and sampling demos.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.

mod commands;
mod config;
mod data;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::TaskKind;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Data(m) => write!(f, "data error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<graph_ising::Error> for CliError {
    fn from(e: graph_ising::Error) -> Self {
        use graph_ising::Error as E;
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if matches!(e, E::InvalidParameter(_) | E::TooLargeForEnumeration(_)) {
            CliError::Config(e.to_string())
        } else {
            CliError::Data(e.to_string())
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "graph-ising", version, about = "Learned-field Ising subsampling")]
struct Cli {
    /// Worker threads (default: all available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a dataset (matrices or meshes) with a manifest.
    GenData(GenDataArgs),
    /// Train a field network from a config file.
    Train(TrainArgs),
    /// Score a checkpoint and baselines; one CSV row per (instance, method).
    Eval(EvalArgs),
    /// Draw one Ising state and dump its spins.
    Sample(SampleArgs),
    /// Mean energy after every sweep as CSV.
    Trace(TraceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    /// Dataset-1 style random symmetric matrices.
    Synthetic,
    /// Banded matrices with Gaussian off-diagonal decay.
    Banded,
    /// Diagonal windows of a large Matrix Market file (`--in`).
    Suitesparse,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub task: TaskKind,
    #[arg(long, value_enum, default_value = "synthetic")]
    pub variant: Variant,
    /// Number of instances (for `suitesparse`: at most this many windows).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Source matrix for `--variant suitesparse`.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Window size for `--variant suitesparse`.
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    /// Train/validation/test shares, e.g. `0.6,0.2,0.2`.
    #[arg(long)]
    pub split: Option<String>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for checkpoints, metrics and the resolved config.
    #[arg(long)]
    pub out: PathBuf,
    /// Dataset directory (overrides `[io] data`).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides `[train] epochs`.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Overrides `[io] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Continue from `<out>/last.ckpt`.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum)]
    pub task: TaskKind,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated baselines (sai: ising,random,only-a; mesh: ising,spectral,fps,random).
    #[arg(long)]
    pub baselines: Option<String>,
    /// Config for sampler settings; defaults to `config.toml` beside the checkpoint.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Manifest split to evaluate (`train`, `val`, `test` or `all`).
    #[arg(long, default_value = "test")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV destination (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct GraphSource {
    /// Edge-list file (`i j` per line).
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Grid graph `ROWSxCOLS`.
    #[arg(long)]
    pub grid: Option<String>,
    /// OFF or OBJ mesh; its edge graph is used.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Geodesic sphere of the given frequency (`10 f² + 2` vertices).
    #[arg(long)]
    pub sphere: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "J", default_value_t = 1.0, allow_hyphen_values = true)]
    pub coupling: f64,
    /// Metropolis sweeps.
    #[arg(long = "T", default_value_t = 10)]
    pub sweeps: usize,
    /// Constant external field.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub field: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Accept with `exp(-2 β ΔE)`.
    #[arg(long)]
    pub doubled_beta: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TraceArgs {
    #[command(flatten)]
    pub source: GraphSource,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long = "J", default_value_t = -1.0, allow_hyphen_values = true)]
    pub coupling: f64,
    #[arg(long, default_value_t = 50)]
    pub sweeps: usize,
    /// Independent chains averaged per sweep.
    #[arg(long, default_value_t = 32)]
    pub replicas: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    log::info!(
        "graph-ising {} ({} threads)",
        env!("CARGO_PKG_VERSION"),
        rayon::current_num_threads()
    );
    match cli.command {
        Command::GenData(a) => commands::gen_data(&a),
        Command::Train(a) => commands::train(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Trace(a) => commands::trace(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
