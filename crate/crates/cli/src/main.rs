//! `hac`: stream points through a sketch, query snapshots, generate data,
//! track interactions and run the benchmark scenarios.
//!
//! Exit codes: 0 on success, 2 when an argument or config value breaks a
//! contract, 3 on unreadable or malformed files.

mod commands;
mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "hac", version, about = "Dense regions of metric-space streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream JSONL points through a sketch and write a snapshot.
    Run(RunArgs),
    /// Query a snapshot; prints JSONL outputs.
    Query(QueryArgs),
    /// Generate synthetic streams.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a benchmark scenario and write a JSON report.
    Bench(BenchArgs),
    /// Run the interaction tracker on object and face streams.
    Track(TrackArgs),
    /// Score output points against labeled data.
    Eval(EvalArgs),
    /// Run a baseline selector on a dataset.
    Baseline(BaselineArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Overrides the seed in the config file.
    #[arg(long, env = "HAC_SEED")]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// JSONL points; `-` or omitted reads stdin.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    snapshot: PathBuf,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryMode {
    Dense,
    TopkFreq,
    TopkRadius,
}

#[derive(Clone, Copy, ValueEnum)]
enum DedupKind {
    None,
    Threshold,
    Theorem,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, value_enum)]
    mode: QueryMode,
    /// Frequency for `dense` and `topk-radius`.
    #[arg(long)]
    f: Option<f64>,
    /// Number of outputs for the top-k modes.
    #[arg(long)]
    k: Option<usize>,
    /// Radius for `topk-freq`, rounded up to the next sketch radius.
    #[arg(long, conflicts_with = "radius_index")]
    r: Option<f64>,
    #[arg(long)]
    radius_index: Option<usize>,
    /// Defaults to the `[dedup]` section of `--config`, else none.
    #[arg(long, value_enum)]
    dedup: Option<DedupKind>,
    /// Duplicate radius for `--dedup threshold`.
    #[arg(long)]
    rd: Option<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Query time; defaults to the last arrival.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Gaussian clusters plus uniform noise.
    Mixture(MixtureArgs),
    /// Object, face and ground-truth streams of the default household.
    Household(HouseholdArgs),
}

#[derive(Args)]
struct MixtureArgs {
    /// Use the 128-dimensional character profile; ignores the shape flags.
    #[arg(long)]
    profile: bool,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    dims: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Cluster frequencies; defaults to an even split of the non-noise mass.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    /// Pairwise distance between cluster means.
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HouseholdArgs {
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    noise_rate: Option<f64>,
    #[arg(long)]
    face_miss_rate: Option<f64>,
    /// Directory for objects.jsonl, faces.jsonl and truth.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
    /// Also write the object and human prototypes as JSON.
    #[arg(long)]
    prototypes: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Characters,
    Guarantees,
    Household,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(value_enum)]
    scenario: Scenario,
    /// Runs seeds `0..seeds`.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    /// Tracker settings for the household scenario.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long)]
    objects: PathBuf,
    #[arg(long)]
    faces: PathBuf,
    /// Reads the `[tracker]` section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// Interaction records as JSONL.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prototypes from `gen household --prototypes`; prints a ranking per object.
    #[arg(long)]
    prototypes: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Output points (any JSONL with `t` and `x`).
    #[arg(long)]
    outputs: PathBuf,
    /// Labeled dataset.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    n: usize,
    /// An output matches the entity of its nearest labeled point within this distance.
    #[arg(long)]
    threshold: f64,
    /// Reads the `[metric]` section.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Random,
    Mis,
}

#[derive(Args)]
struct BaselineArgs {
    #[arg(value_enum)]
    kind: BaselineKind,
    #[arg(long)]
    data: PathBuf,
    /// Sample size for `random`.
    #[arg(long)]
    k: Option<usize>,
    /// Independence radius for `mis`.
    #[arg(long)]
    r: Option<f64>,
    #[command(flatten)]
    seed: SeedArg,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command: message for stderr and the process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn contract(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    pub fn format(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure::format(format!("{}: {e}", path.display()))
    }

    pub fn context(self, what: &str) -> Self {
        Failure { code: self.code, message: format!("{what}: {}", self.message) }
    }
}

impl From<hac_core::Error> for Failure {
    fn from(e: hac_core::Error) -> Self {
        Failure {
            code: if e.is_format_or_io() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Query(a) => commands::query(a),
        Command::Gen(GenCommand::Mixture(a)) => commands::gen_mixture(a),
        Command::Gen(GenCommand::Household(a)) => commands::gen_household(a),
        Command::Bench(a) => commands::bench(a),
        Command::Track(a) => commands::track(a),
        Command::Eval(a) => commands::eval(a),
        Command::Baseline(a) => commands::baseline(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("hac: {f}");
            ExitCode::from(f.code)
        }
    }
}
