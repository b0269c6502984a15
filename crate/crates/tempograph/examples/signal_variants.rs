//! The three temporal-signal storage variants and the temporal train/test
//! split, including the redundancy-free sharing each variant guarantees.

use std::sync::Arc;

use tempograph::autodiff::Tensor;
use tempograph::graph::Graph;
use tempograph::signal::TemporalSignal;

fn ring(n: usize) -> Arc<Graph> {
    let edges = (0..n).flat_map(|i| [(i, (i + 1) % n), ((i + 1) % n, i)]).collect();
    Arc::new(Graph::new(n, edges, None).unwrap())
}

fn features(n: usize, d: usize, t: usize) -> Tensor {
    Tensor::from_vec(n, d, (0..n * d).map(|i| (t * 100 + i) as f64).collect()).unwrap()
}

fn main() -> tempograph::Result<()> {
    let n = 4;
    let t_count = 10;
    let targets: Vec<Tensor> = (0..t_count).map(|t| features(n, 1, t)).collect();

    // Variant 1: dynamic graph, temporal signal - everything varies per step.
    let dynamic = TemporalSignal::dynamic_graph(
        (0..t_count).map(|_| ring(n)).collect(),
        (0..t_count).map(|t| features(n, 3, t)).collect(),
        targets.clone(),
    )?;

    // Variant 2: dynamic graph, static signal - one feature matrix shared by
    // every snapshot.
    let static_signal = TemporalSignal::dynamic_graph_static_signal(
        (0..t_count).map(|_| ring(n)).collect(),
        features(n, 3, 0),
        targets.clone(),
    )?;

    // Variant 3: static graph, temporal signal - one graph shared by every
    // snapshot.
    let static_graph =
        TemporalSignal::static_graph(ring(n), (0..t_count).map(|t| features(n, 3, t)).collect(), targets)?;

    for sig in [&dynamic, &static_signal, &static_graph] {
        println!(
            "{}: T={}, |V|={}, d={}",
            sig.variant(),
            sig.len(),
            sig.num_nodes(),
            sig.num_features()
        );
    }

    // Sharing is structural, not copied.
    let a = static_signal.index(0)?;
    let b = static_signal.index(9)?;
    println!("variant 2 shares one feature matrix: {}", a.x.shares_storage(&b.x));
    let a = static_graph.index(0)?;
    let b = static_graph.index(9)?;
    println!("variant 3 shares one graph: {}", Arc::ptr_eq(&a.graph, &b.graph));

    // Temporal split: first floor(0.9 * 10) = 9 snapshots train, 1 tests.
    let (train, test) = static_graph.split(0.9)?;
    println!("split 0.9 of T=10 -> {}/{}", train.len(), test.len());
    println!(
        "train and test still share the graph: {}",
        Arc::ptr_eq(
            train.static_graph_handle().unwrap(),
            test.static_graph_handle().unwrap()
        )
    );
    Ok(())
}
