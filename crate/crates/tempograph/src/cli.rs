//! Run configurations and command implementations behind the `tempograph`
//! binary: `train`, `benchmark`, `inspect` and `fetch`. Every command echoes
//! its full configuration and seed into the report it writes, so a report is
//! sufficient to reproduce the run.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::data::{
    default_cache_dir, fetch_dataset, load_dataset, synthetic_benchmark_sequence,
    DatasetDocument,
};
use crate::nn::{Checkpoint, LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};
use crate::signal::TemporalSignal;
use crate::train::{evaluate_mse, train, Adam, Regime};
use crate::{Error, Result};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Fully validated configuration of a training run, echoed verbatim into the
/// report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub dataset: String,
    pub model: ModelKind,
    pub filters: usize,
    pub k: usize,
    pub lr: f64,
    pub epochs: usize,
    pub regime: Regime,
    pub train_ratio: f64,
    pub dropout: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.filters == 0 {
            return Err(Error::InvalidParameter("filters must be positive".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be a nonnegative float, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be positive".into()));
        }
        if !(0.0 < self.train_ratio && self.train_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train_ratio must be in (0, 1), got {}",
                self.train_ratio
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidParameter(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }
}

/// Report written by `tempograph train`. `epoch_seconds` is wall-clock and
/// therefore varies between runs; every other field is seed-deterministic.
#[derive(Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub library_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub losses: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub test_mse: f64,
}

fn resolve_dataset(spec: &str) -> Result<TemporalSignal> {
    if spec.starts_with("http://") || spec.starts_with("https://") {
        let path = fetch_dataset(spec, &default_cache_dir())?;
        load_dataset(&path)
    } else {
        load_dataset(Path::new(spec))
    }
}

/// Load, split, train, evaluate and (optionally) write the report file.
/// The returned report's `test_mse` is also what the binary prints as its
/// final `MSE: <value>` line.
pub fn cmd_train(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let dataset = resolve_dataset(&config.dataset)?;
    let (train_sig, test_sig) = dataset.split(config.train_ratio)?;
    let model_config = ModelConfig::new(
        config.model,
        dataset.num_features(),
        config.filters,
        config.k,
        LambdaMaxPolicy::Fixed(2.0),
        config.dropout,
    )?;
    let model = RecurrentGcn::new(model_config, config.seed)?;
    let mut opt = Adam::new(config.lr);
    let train_report = train(
        &model,
        &train_sig,
        config.regime,
        config.epochs,
        &mut opt,
        config.seed,
    )?;
    let test_mse = evaluate_mse(&model, &test_sig)?;
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        library_version: crate::VERSION.to_string(),
        config: config.clone(),
        seed: config.seed,
        losses: train_report.losses,
        epoch_seconds: train_report.epoch_seconds,
        test_mse,
    };
    if let Some(out) = &config.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    if let Some(path) = &config.checkpoint {
        crate::nn::save_checkpoint(&model, path)?;
    }
    Ok(report)
}

/// Configuration of the synthetic runtime benchmark.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub nodes: Vec<usize>,
    pub edges_per_node: usize,
    pub features: usize,
    pub snapshots: usize,
    pub filters: usize,
    pub k: usize,
    pub lr: f64,
    pub rewire_probability: f64,
    pub regimes: Vec<Regime>,
    pub repeats: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema_version: u32,
    pub library_version: String,
    pub config: BenchmarkConfig,
    pub results: Vec<BenchmarkCell>,
}

/// Mean/std epoch seconds for one (input size, regime) pair.
#[derive(Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub nodes: usize,
    pub edges_per_node: usize,
    pub regime: Regime,
    pub repeats: usize,
    pub mean_seconds: f64,
    pub std_seconds: f64,
}

/// One GConvGRU epoch per regime per repeat on freshly generated
/// Watts-Strogatz sequences, one cell per (node count, regime).
/// Repeats run sequentially to avoid timing interference.
pub fn cmd_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be positive".into()));
    }
    let mut results = Vec::new();
    for &n in &config.nodes {
        // Cap the lattice degree at n/2 and keep it even.
        let k_edges = config.edges_per_node.min(n / 2) & !1;
        let sequence = synthetic_benchmark_sequence(
            n,
            k_edges,
            config.features,
            config.snapshots,
            Some(config.rewire_probability),
            config.seed,
        )?;
        let model_config = ModelConfig::new(
            ModelKind::GConvGru,
            config.features,
            config.filters,
            config.k,
            LambdaMaxPolicy::Fixed(2.0),
            0.5,
        )?;
        // One untimed warmup epoch per regime absorbs one-time costs (page
        // faults, buffer-pool priming) so the measured repeats reflect
        // steady-state epoch time.
        for &regime in &config.regimes {
            let model = RecurrentGcn::new(model_config, config.seed)?;
            let mut opt = Adam::new(config.lr);
            train(&model, &sequence, regime, 1, &mut opt, config.seed)?;
        }
        // Regimes are interleaved within each repeat (still strictly
        // sequential) so slow drifts in machine load hit every regime
        // equally instead of biasing whichever ran last, and the order
        // rotates between repeats so neither regime always runs first.
        let mut timings: Vec<Vec<f64>> = vec![Vec::with_capacity(config.repeats); config.regimes.len()];
        for repeat in 0..config.repeats {
            for idx in 0..config.regimes.len() {
                let slot = (idx + repeat) % config.regimes.len();
                let regime = config.regimes[slot];
                let model = RecurrentGcn::new(model_config, config.seed + repeat as u64)?;
                let mut opt = Adam::new(config.lr);
                let report = train(&model, &sequence, regime, 1, &mut opt, config.seed)?;
                timings[slot].push(report.epoch_seconds[0]);
            }
        }
        for (slot, &regime) in config.regimes.iter().enumerate() {
            let timings = &timings[slot];
            let mean = timings.iter().sum::<f64>() / timings.len() as f64;
            let var = timings.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
                / timings.len() as f64;
            results.push(BenchmarkCell {
                nodes: n,
                edges_per_node: k_edges,
                regime,
                repeats: config.repeats,
                mean_seconds: mean,
                std_seconds: var.sqrt(),
            });
        }
    }
    let report = BenchmarkReport {
        schema_version: REPORT_SCHEMA_VERSION,
        library_version: crate::VERSION.to_string(),
        config: config.clone(),
        results,
    };
    if let Some(out) = &config.out {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(report)
}

/// Human-readable summary of a dataset or checkpoint file.
pub fn cmd_inspect(path: &Path) -> Result<String> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if value.get("params").is_some() {
        let checkpoint: Checkpoint =
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        let model = checkpoint.into_model()?;
        let mut out = String::from("checkpoint\n");
        for (name, v) in model.inspect_hyperparameters() {
            out.push_str(&format!("  {name} = {v}\n"));
        }
        out.push_str(&format!("  seed = {}\n", model.seed()));
        out.push_str("parameters\n");
        for p in model.parameters() {
            let (r, c) = p.shape();
            out.push_str(&format!("  {} [{r}x{c}]\n", p.name()));
        }
        return Ok(out);
    }
    let doc: DatasetDocument =
        serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let sig = crate::data::load_dataset_str(&text)?;
    let mut edge_counts: Vec<usize> = (0..sig.len())
        .map(|t| sig.index(t).expect("in range").graph.num_edges())
        .collect();
    edge_counts.dedup();
    let edges_summary = if edge_counts.len() == 1 {
        format!("{}", edge_counts[0])
    } else {
        format!(
            "{}..{}",
            edge_counts.iter().min().expect("non-empty"),
            edge_counts.iter().max().expect("non-empty")
        )
    };
    let name = doc
        .metadata
        .as_ref()
        .and_then(|m| m.name.clone())
        .unwrap_or_else(|| "unnamed".into());
    Ok(format!(
        "dataset {name}\n  variant = {}\n  T = {}\n  nodes = {}\n  features = {}\n  edges = {edges_summary}\n",
        sig.variant(),
        sig.len(),
        sig.num_nodes(),
        sig.num_features(),
    ))
}

/// Fetches a dataset URL into the cache, returning the cached path.
pub fn cmd_fetch(url: &str, cache_dir: Option<&Path>) -> Result<PathBuf> {
    let dir = cache_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(default_cache_dir);
    fetch_dataset(url, &dir)
}

/// Exit code mapping: 1 for configuration errors, 2 for dataset/file errors,
/// 3 for numeric failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) => 1,
        Error::Numeric(_) | Error::NonFinite { .. } => 3,
        _ => 2,
    }
}
