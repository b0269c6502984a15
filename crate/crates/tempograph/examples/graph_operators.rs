//! The sparse operators behind the convolutions: normalized adjacency,
//! scaled Laplacian and the forward/backward random-walk matrices of a
//! Watts-Strogatz graph.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempograph::graph::{
    random_walk_matrices, scaled_laplacian, sym_norm_adjacency, watts_strogatz, LambdaMax,
};

fn print_dense(label: &str, op: &tempograph::graph::SparseOperator) {
    let dense = op.to_dense();
    println!("{label} ({} nonzeros):", op.entries().len());
    for r in 0..dense.rows() {
        let row: Vec<String> = (0..dense.cols())
            .map(|c| format!("{:6.3}", dense.data()[r * dense.cols() + c]))
            .collect();
        println!("  [{}]", row.join(", "));
    }
}

fn main() -> tempograph::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let g = watts_strogatz(8, 4, 0.2, &mut rng)?;
    println!(
        "Watts-Strogatz graph: {} nodes, {} directed edges",
        g.num_nodes(),
        g.num_edges()
    );

    print_dense("sym-normalized adjacency (with self-loops)", &sym_norm_adjacency(&g, true));
    print_dense(
        "scaled Laplacian, lambda_max fixed at 2",
        &scaled_laplacian(&g, LambdaMax::Fixed(2.0))?,
    );
    print_dense(
        "scaled Laplacian, lambda_max from power iteration",
        &scaled_laplacian(&g, LambdaMax::Exact)?,
    );

    let (rw_out, rw_in) = random_walk_matrices(&g);
    print_dense("forward random walk D_O^-1 W", &rw_out);
    print_dense("backward random walk D_I^-1 W^T", &rw_in);
    Ok(())
}
