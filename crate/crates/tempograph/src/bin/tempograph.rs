use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use tempograph::cli::{
    cmd_benchmark, cmd_fetch, cmd_inspect, cmd_train, exit_code, BenchmarkConfig, RunConfig,
};
use tempograph::nn::ModelKind;
use tempograph::train::Regime;

#[derive(Parser)]
#[command(
    name = "tempograph",
    version,
    about = "Train and benchmark recurrent graph convolutional networks on spatiotemporal graph signals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a dataset and evaluate it on the held-out tail.
    Train(TrainArgs),
    /// Measure epoch runtime on synthetic Watts-Strogatz sequences.
    Benchmark(BenchmarkArgs),
    /// Summarize a dataset or checkpoint file.
    Inspect {
        /// Dataset or checkpoint JSON path.
        path: PathBuf,
    },
    /// Download a dataset into the local cache.
    Fetch {
        /// Dataset URL.
        url: String,
        /// Cache directory (defaults to $TEMPOGRAPH_CACHE_DIR or .tempograph-cache).
        #[arg(long)]
        cache_dir: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset path or http(s) URL.
    #[arg(long)]
    dataset: String,
    /// Model kind: gconv-gru, gconv-lstm or dcrnn.
    #[arg(long, default_value = "dcrnn")]
    model: String,
    /// Convolutional filter count (hidden width).
    #[arg(long, default_value_t = 32)]
    filters: usize,
    /// Chebyshev order (gconv-gru/gconv-lstm) or diffusion order (dcrnn).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Backpropagation regime: incremental or cumulative.
    #[arg(long, default_value = "incremental")]
    regime: String,
    /// Fraction of leading snapshots used for training.
    #[arg(long, default_value_t = 0.9)]
    train_ratio: f64,
    /// Dropout rate after the recurrent layer.
    #[arg(long, default_value_t = 0.5)]
    dropout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model checkpoint output path.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Node counts to sweep, comma separated.
    #[arg(long, default_value = "64,128,256", value_delimiter = ',')]
    nodes: Vec<usize>,
    /// Lattice edges per node (capped at n/2 per size).
    #[arg(long, default_value_t = 32)]
    edges_per_node: usize,
    /// Node feature width.
    #[arg(long, default_value_t = 32)]
    features: usize,
    /// Snapshots per synthetic sequence.
    #[arg(long, default_value_t = 100)]
    snapshots: usize,
    #[arg(long, default_value_t = 32)]
    filters: usize,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// Watts-Strogatz rewire probability.
    #[arg(long, default_value_t = 0.1)]
    rewire_probability: f64,
    /// Regimes to time, comma separated.
    #[arg(long, default_value = "cumulative,incremental", value_delimiter = ',')]
    regimes: Vec<String>,
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run() -> tempograph::Result<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            return Ok(());
        }
    };
    match cli.command {
        Command::Train(args) => {
            let config = RunConfig {
                command: "train".into(),
                dataset: args.dataset,
                model: args.model.parse::<ModelKind>()?,
                filters: args.filters,
                k: args.k,
                lr: args.lr,
                epochs: args.epochs,
                regime: args.regime.parse::<Regime>()?,
                train_ratio: args.train_ratio,
                dropout: args.dropout,
                seed: args.seed,
                out: args.out,
                checkpoint: args.checkpoint,
            };
            let report = cmd_train(&config)?;
            println!("MSE: {:.4}", report.test_mse);
        }
        Command::Benchmark(args) => {
            let config = BenchmarkConfig {
                nodes: args.nodes,
                edges_per_node: args.edges_per_node,
                features: args.features,
                snapshots: args.snapshots,
                filters: args.filters,
                k: args.k,
                lr: args.lr,
                rewire_probability: args.rewire_probability,
                regimes: args
                    .regimes
                    .iter()
                    .map(|r| r.parse::<Regime>())
                    .collect::<tempograph::Result<_>>()?,
                repeats: args.repeats,
                seed: args.seed,
                out: args.out,
            };
            let report = cmd_benchmark(&config)?;
            for cell in &report.results {
                println!(
                    "n={} regime={} mean={:.4}s std={:.4}s",
                    cell.nodes, cell.regime, cell.mean_seconds, cell.std_seconds
                );
            }
        }
        Command::Inspect { path } => {
            print!("{}", cmd_inspect(&path)?);
        }
        Command::Fetch { url, cache_dir } => {
            let path = cmd_fetch(&url, cache_dir.as_deref())?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
