use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use crate::autodiff::Tensor;
use crate::graph::{random_walk_matrices, watts_strogatz};
use crate::signal::TemporalSignal;
use crate::Result;

/// Learnable fixture: one Watts-Strogatz graph whose features evolve by
/// one step of forward random-walk diffusion plus small Gaussian noise
/// (sigma = 0.01); the target at time `t` is the mean over feature channels
/// of the diffused next-step features. A one-hop recurrent GCN can fit this
/// signal almost exactly.
pub fn synthetic_diffusion_dataset(
    n: usize,
    k: usize,
    p: f64,
    t_count: usize,
    d: usize,
    seed: u64,
) -> Result<TemporalSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = Arc::new(watts_strogatz(n, k, p, &mut rng)?);
    let (rw_out, _) = random_walk_matrices(&graph);
    let mut x = Tensor::from_vec(
        n,
        d,
        (0..n * d).map(|_| rng.random::<f64>() - 0.5).collect(),
    )?;
    let mut features = Vec::with_capacity(t_count);
    let mut targets = Vec::with_capacity(t_count);
    for _ in 0..t_count {
        let diffused = rw_out.apply(&x)?;
        let y: Vec<f64> = (0..n)
            .map(|i| diffused.data()[i * d..(i + 1) * d].iter().sum::<f64>() / d as f64)
            .collect();
        features.push(x.clone());
        targets.push(Tensor::from_vec(n, 1, y)?);
        let noisy: Vec<f64> = diffused
            .data()
            .iter()
            .map(|v| v + 0.01 * gaussian(&mut rng))
            .collect();
        x = Tensor::from_vec(n, d, noisy)?;
    }
    TemporalSignal::static_graph(graph, features, targets)
}

/// Runtime-benchmark sequence: `T` independently sampled Watts-Strogatz
/// graphs (rewire probability 0.1 unless overridden), uniform-random
/// features and Bernoulli(0.5) targets in {0, 1}.
pub fn synthetic_benchmark_sequence(
    n: usize,
    k_edges_per_node: usize,
    d: usize,
    t_count: usize,
    p: Option<f64>,
    seed: u64,
) -> Result<TemporalSignal> {
    let p = p.unwrap_or(0.1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(t_count);
    let mut features = Vec::with_capacity(t_count);
    let mut targets = Vec::with_capacity(t_count);
    for _ in 0..t_count {
        graphs.push(Arc::new(watts_strogatz(n, k_edges_per_node, p, &mut rng)?));
        features.push(Tensor::from_vec(
            n,
            d,
            (0..n * d).map(|_| rng.random::<f64>()).collect(),
        )?);
        targets.push(Tensor::from_vec(
            n,
            1,
            (0..n)
                .map(|_| if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 })
                .collect(),
        )?);
    }
    TemporalSignal::dynamic_graph(graphs, features, targets)
}

/// Box-Muller standard normal draw.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Mean squared error of the best constant predictor on a signal's targets:
/// the population variance of all target entries.
pub fn constant_mean_mse(sig: &TemporalSignal) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for t in 0..sig.len() {
        let y = sig.targets_at(t);
        sum += y.data().iter().sum::<f64>();
        count += y.len();
    }
    let mean = sum / count as f64;
    let mut var = 0.0;
    for t in 0..sig.len() {
        for v in sig.targets_at(t).data() {
            var += (v - mean) * (v - mean);
        }
    }
    var / count as f64
}
