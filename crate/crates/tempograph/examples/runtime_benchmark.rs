//! Scaled-down runtime benchmark: epoch wall-clock per regime on synthetic
//! Watts-Strogatz sequences of growing size. The full-size sweep is available
//! through `tempograph benchmark`.

use tempograph::cli::{cmd_benchmark, BenchmarkConfig};
use tempograph::train::Regime;

fn main() -> tempograph::Result<()> {
    let config = BenchmarkConfig {
        nodes: vec![16, 32, 64],
        edges_per_node: 8,
        features: 8,
        snapshots: 20,
        filters: 8,
        k: 2,
        lr: 0.01,
        rewire_probability: 0.1,
        regimes: vec![Regime::Cumulative, Regime::Incremental],
        repeats: 3,
        seed: 0,
        out: None,
    };
    let report = cmd_benchmark(&config)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "nodes", "regime", "mean (s)", "std (s)");
    for cell in &report.results {
        println!(
            "{:>6} {:>12} {:>12.4} {:>12.4}",
            cell.nodes,
            cell.regime.to_string(),
            cell.mean_seconds,
            cell.std_seconds
        );
    }
    Ok(())
}
