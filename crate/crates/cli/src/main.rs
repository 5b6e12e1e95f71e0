use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nliconquer::dataset::Scale;
use nliconquer::qot::EstimatorKind;

mod bench;
mod commands;
mod config;

/// SCI-assisted machine-learning QoT estimation pipeline.
#[derive(Debug, Parser)]
#[command(name = "nliconquer", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Run config (TOML). Falls back to $NLICONQUER_CONFIG, then built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Coefficient store (JSONL).
    #[arg(long, global = true)]
    pub store: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample link configurations and write the labelled feature dataset.
    GenDataset(GenDatasetArgs),
    /// Train the gradient-boosted NLI regressor.
    Train(TrainArgs),
    /// Compare ML and closed-form SNR errors against the oracle on the test split.
    Eval(EvalArgs),
    /// Place a demand sequence on one link, first-fit versus NLI-aware.
    OptimizeSpectrum(OptimizeArgs),
    /// Multi-period planning on a topology.
    Plan(PlanArgs),
    /// Per-call latency of ML, closed-form and oracle estimates.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Link count; overrides the scale.
    #[arg(long)]
    pub links: Option<usize>,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    /// generation.toml replacing the [generation] section.
    #[arg(long)]
    pub generation: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum ScaleArg {
    Desk,
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Grid-search depth, learning rate and subsample on the validation split.
    #[arg(long)]
    pub tune: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub spans: Option<usize>,
    #[arg(long)]
    pub span_km: Option<f64>,
    #[arg(long)]
    pub fill: Option<f64>,
    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Option<EstimatorKind>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Report file; layouts are written next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// Topology JSON; the built-in five-node line when omitted.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long)]
    pub years: Option<usize>,
    #[arg(long, value_parser = parse_estimator)]
    pub estimator: Option<EstimatorKind>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output directory for plan.json and traffic.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Cold-cache oracle repetitions.
    #[arg(long)]
    pub oracle_iterations: Option<usize>,
    /// Also write the measurements as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    s.parse::<EstimatorKind>().map_err(|e| e.to_string())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.global.threads {
        if n == 0 {
            anyhow::bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let g = &cli.global;
    match cli.command {
        Command::GenDataset(a) => commands::gen_dataset(g, a),
        Command::Train(a) => commands::train(g, a),
        Command::Eval(a) => commands::eval(g, a),
        Command::OptimizeSpectrum(a) => commands::optimize_spectrum(g, a),
        Command::Plan(a) => commands::plan(g, a),
        Command::Bench(a) => bench::run(g, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
