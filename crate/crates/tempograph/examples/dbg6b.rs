use tempograph::cli::{cmd_benchmark, BenchmarkConfig};
use tempograph::train::Regime;

fn main() {
    let config = BenchmarkConfig {
        nodes: std::env::args()
            .nth(1)
            .map(|a| a.split(',').map(|v| v.parse().unwrap()).collect())
            .unwrap_or_else(|| vec![64, 128, 256]),
        edges_per_node: 32,
        features: 32,
        snapshots: 100,
        filters: 32,
        k: 2,
        lr: 0.01,
        rewire_probability: 0.1,
        regimes: vec![Regime::Cumulative, Regime::Incremental],
        repeats: 10,
        seed: 0,
        out: None,
    };
    let report = cmd_benchmark(&config).unwrap();
    for cell in &report.results {
        println!(
            "n={:3} {:11} mean {:.3}s std {:.3}s",
            cell.nodes, cell.regime.to_string(), cell.mean_seconds, cell.std_seconds
        );
    }
}
