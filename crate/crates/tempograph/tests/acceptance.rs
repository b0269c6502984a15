//! End-to-end acceptance suite. Runs all eight criteria sequentially inside
//! one test so the timing-sensitive checks are not perturbed by parallel
//! test execution, and prints one pass/fail line per criterion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use std::time::Instant;

use tempograph::autodiff::{Parameter, Tape, Tensor};
use tempograph::cli::{cmd_benchmark, BenchmarkConfig};
use tempograph::data::{
    constant_mean_mse, load_dataset_str, serialize_dataset, synthetic_diffusion_dataset,
};
use tempograph::graph::{random_walk_matrices, scaled_laplacian, Graph, LambdaMax};
use tempograph::nn::{
    save_checkpoint, load_checkpoint, ChebConv, DiffusionConv, LambdaMaxPolicy, Linear,
    ModelConfig, ModelKind, RecurrentGcn,
};
use tempograph::signal::{SignalVariant, Snapshot, TemporalSignal};
use tempograph::train::{evaluate_mse, train, Adam, Regime, TrainReport};

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Random directed weighted graph with every node guaranteed at least one
/// outgoing and one incoming edge (a ring plus Bernoulli extras).
fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize) -> Graph {
    let n = rng.random_range(2..=max_nodes);
    let mut edges = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n));
        weights.push(rng.random_range(0.1..2.0));
    }
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random::<f64>() < 0.3 {
                edges.push((s, t));
                weights.push(rng.random_range(0.1..2.0));
            }
        }
    }
    Graph::new(n, edges, Some(weights)).unwrap()
}

fn random_tensor(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

/// Checks every parameter gradient and the input gradient of a differentiable
/// computation against central finite differences.
///
/// `eval` computes the scalar loss from the current parameter values and the
/// given input data; `tracked_loss` records the same computation on a tape
/// with the input bound as a leaf and returns (loss, input leaf).
fn gradient_check(
    label: &str,
    params: &[&Parameter],
    x0: &[f64],
    x_shape: (usize, usize),
    eval: &dyn Fn(&[f64]) -> f64,
    tracked_loss: &dyn Fn(&Tape, &Tensor) -> Tensor,
) -> Result<(), String> {
    for p in params {
        p.zero_grad();
    }
    let tape = Tape::new();
    let x_leaf = tape.leaf(&Tensor::from_vec(x_shape.0, x_shape.1, x0.to_vec()).unwrap());
    let loss = tracked_loss(&tape, &x_leaf);
    let grads = tape.backward(&loss).unwrap();
    for p in params {
        p.harvest(&grads);
    }
    let x_grad = grads
        .get(&x_leaf)
        .map(|g| g.data().to_vec())
        .unwrap_or_else(|| vec![0.0; x0.len()]);

    for (i, analytic) in x_grad.iter().enumerate() {
        let mut plus = x0.to_vec();
        let mut minus = x0.to_vec();
        plus[i] += FD_STEP;
        minus[i] -= FD_STEP;
        let fd = (eval(&plus) - eval(&minus)) / (2.0 * FD_STEP);
        if rel_err(*analytic, fd) >= FD_REL_TOL {
            return Err(format!(
                "{label}: input grad [{i}] analytic {analytic} vs fd {fd}"
            ));
        }
    }
    for p in params {
        let base = p.value().data().to_vec();
        let grad = p.grad();
        let (rows, cols) = p.shape();
        for i in 0..base.len() {
            let mut plus = base.clone();
            let mut minus = base.clone();
            plus[i] += FD_STEP;
            minus[i] -= FD_STEP;
            p.set_value(&Tensor::from_vec(rows, cols, plus).unwrap()).unwrap();
            let lp = eval(x0);
            p.set_value(&Tensor::from_vec(rows, cols, minus).unwrap()).unwrap();
            let lm = eval(x0);
            p.set_value(&Tensor::from_vec(rows, cols, base.clone()).unwrap()).unwrap();
            let fd = (lp - lm) / (2.0 * FD_STEP);
            if rel_err(grad[i], fd) >= FD_REL_TOL {
                return Err(format!(
                    "{label}: param {} [{i}] analytic {} vs fd {fd}",
                    p.name(),
                    grad[i]
                ));
            }
        }
        p.zero_grad();
    }
    Ok(())
}

/// Weighted sum reducing a matrix output to a scalar without symmetry.
fn weighted(out: &Tensor) -> Tensor {
    let w = Tensor::from_vec(
        out.rows(),
        out.cols(),
        (0..out.len()).map(|i| 0.2 + 0.13 * i as f64).collect(),
    )
    .unwrap();
    out.hadamard(&w).unwrap().sum().unwrap()
}

fn criterion_1_gradient_fidelity() -> Result<(), String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for round in 0..3 {
        let g = random_graph(&mut rng, 8);
        let n = g.num_nodes();
        let d = rng.random_range(1..=4);
        let filters = rng.random_range(1..=4);
        let l_hat = scaled_laplacian(&g, LambdaMax::Fixed(2.0)).unwrap();
        let (rw_out, rw_in) = random_walk_matrices(&g);
        let x0 = random_tensor(&mut rng, n, d).data().to_vec();

        let linear = Linear::new("linear", d, filters, &mut rng);
        gradient_check(
            &format!("linear round {round}"),
            &linear.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                weighted(&linear.forward(&tape, &x).unwrap()).item().unwrap()
            },
            &|tape, x| weighted(&linear.forward(tape, x).unwrap()),
        )?;

        let cheb = ChebConv::new("cheb", 3, d, filters, &mut rng).unwrap();
        gradient_check(
            &format!("cheb_conv round {round}"),
            &cheb.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                weighted(&cheb.forward(&tape, &x, &l_hat).unwrap()).item().unwrap()
            },
            &|tape, x| weighted(&cheb.forward(tape, x, &l_hat).unwrap()),
        )?;

        let diff = DiffusionConv::new("diff", 2, d, filters, &mut rng).unwrap();
        gradient_check(
            &format!("diffusion_conv round {round}"),
            &diff.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                weighted(&diff.forward(&tape, &x, &rw_out, &rw_in).unwrap())
                    .item()
                    .unwrap()
            },
            &|tape, x| weighted(&diff.forward(tape, x, &rw_out, &rw_in).unwrap()),
        )?;

        use tempograph::nn::{DcrnnCell, GConvGruCell, GConvLstmCell};
        let gru = GConvGruCell::new("gru", 2, d, filters, &mut rng).unwrap();
        gradient_check(
            &format!("gconv_gru round {round}"),
            &gru.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                weighted(&gru.forward(&tape, &x, None, &l_hat).unwrap()).item().unwrap()
            },
            &|tape, x| weighted(&gru.forward(tape, x, None, &l_hat).unwrap()),
        )?;

        let lstm = GConvLstmCell::new("lstm", 2, d, filters, &mut rng).unwrap();
        // Start from a nonzero state so the peephole paths carry gradient.
        let h0 = random_tensor(&mut rng, n, filters);
        let c0 = random_tensor(&mut rng, n, filters);
        gradient_check(
            &format!("gconv_lstm round {round}"),
            &lstm.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                let (h, c) = lstm.forward(&tape, &x, Some((&h0, &c0)), &l_hat).unwrap();
                weighted(&h).add(&weighted(&c)).unwrap().item().unwrap()
            },
            &|tape, x| {
                let (h, c) = lstm.forward(tape, x, Some((&h0, &c0)), &l_hat).unwrap();
                weighted(&h).add(&weighted(&c)).unwrap()
            },
        )?;

        let dcrnn = DcrnnCell::new("dcrnn", 1, d, filters, &mut rng).unwrap();
        gradient_check(
            &format!("dcrnn round {round}"),
            &dcrnn.parameters(),
            &x0,
            (n, d),
            &|xd| {
                let tape = Tape::new();
                let x = Tensor::from_vec(n, d, xd.to_vec()).unwrap();
                weighted(&dcrnn.forward(&tape, &x, None, &rw_out, &rw_in).unwrap())
                    .item()
                    .unwrap()
            },
            &|tape, x| weighted(&dcrnn.forward(tape, x, None, &rw_out, &rw_in).unwrap()),
        )?;

        // Full model unrolled over a 3-snapshot sequence: the checked input
        // is the first snapshot's features, state carries across steps.
        for kind in [ModelKind::GConvGru, ModelKind::GConvLstm, ModelKind::Dcrnn] {
            let config =
                ModelConfig::new(kind, d, filters, 2, LambdaMaxPolicy::Fixed(2.0), 0.0).unwrap();
            let model = RecurrentGcn::new(config, 50 + round).unwrap();
            let graph = Arc::new(random_graph(&mut rng, 8));
            let n = graph.num_nodes();
            let x0 = random_tensor(&mut rng, n, d).data().to_vec();
            let later: Vec<(Tensor, Tensor)> = (0..3)
                .map(|_| {
                    (
                        random_tensor(&mut rng, n, d),
                        random_tensor(&mut rng, n, 1),
                    )
                })
                .collect();
            let run = |tape: &Tape, x: &Tensor| -> Tensor {
                let mut loss: Option<Tensor> = None;
                let mut state = None;
                let mut dropout_rng = ChaCha8Rng::seed_from_u64(0);
                for (t, (xt, yt)) in later.iter().enumerate() {
                    let snap = Snapshot {
                        graph: Arc::clone(&graph),
                        x: if t == 0 { x.clone() } else { xt.clone() },
                        y: yt.clone(),
                        t,
                        mask: None,
                    };
                    let (y_hat, new_state) = model
                        .forward(tape, &snap, state.as_ref(), true, &mut dropout_rng)
                        .unwrap();
                    state = Some(new_state);
                    let step_loss = y_hat.mse_loss(&snap.y).unwrap();
                    loss = Some(match loss {
                        None => step_loss,
                        Some(acc) => acc.add(&step_loss).unwrap(),
                    });
                }
                loss.unwrap()
            };
            gradient_check(
                &format!("recurrent_gcn {kind} round {round}"),
                &model.parameters(),
                &x0,
                (n, d),
                &|xd| {
                    let tape = Tape::new();
                    run(&tape, &Tensor::from_vec(n, d, xd.to_vec()).unwrap())
                        .item()
                        .unwrap()
                },
                &run,
            )?;
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        return Err(format!("gradient checks took {elapsed:.1}s (limit 60s)"));
    }
    Ok(())
}

/// Dense normalized-Laplacian oracle built with plain loops, independent of
/// the library's sparse operator construction.
fn dense_scaled_laplacian(g: &Graph) -> Vec<Vec<f64>> {
    let n = g.num_nodes();
    let mut w = vec![vec![0.0; n]; n];
    for (&(s, t), &v) in g.edge_index().iter().zip(g.edge_weight()) {
        w[s][t] += v;
    }
    let mut sym = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            sym[i][j] = (w[i][j] + w[j][i]) / 2.0;
        }
    }
    let degree: Vec<f64> = (0..n).map(|i| sym[i].iter().sum()).collect();
    let inv_sqrt: Vec<f64> = degree
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    let mut scaled = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let l = if i == j { 1.0 } else { 0.0 } - sym[i][j] * inv_sqrt[i] * inv_sqrt[j];
            // lambda_max fixed at 2: (2/2) L - I.
            scaled[i][j] = l - if i == j { 1.0 } else { 0.0 };
        }
    }
    scaled
}

fn dense_random_walks(g: &Graph) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = g.num_nodes();
    let mut w = vec![vec![0.0; n]; n];
    for (&(s, t), &v) in g.edge_index().iter().zip(g.edge_weight()) {
        w[s][t] += v;
    }
    let out_degree: Vec<f64> = (0..n).map(|i| w[i].iter().sum()).collect();
    let in_degree: Vec<f64> = (0..n).map(|j| (0..n).map(|i| w[i][j]).sum()).collect();
    let mut rw_out = vec![vec![0.0; n]; n];
    let mut rw_in = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if out_degree[i] > 0.0 {
                rw_out[i][j] = w[i][j] / out_degree[i];
            }
            if in_degree[i] > 0.0 {
                rw_in[i][j] = w[j][i] / in_degree[i];
            }
        }
    }
    (rw_out, rw_in)
}

fn dense_matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            let aik = a[i][k];
            for j in 0..p {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn as_rows(t: &Tensor) -> Vec<Vec<f64>> {
    (0..t.rows())
        .map(|r| t.data()[r * t.cols()..(r + 1) * t.cols()].to_vec())
        .collect()
}

fn criterion_2_oracle_equivalence() -> Result<(), String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut max_err = 0.0_f64;
    for round in 0..100 {
        let g = random_graph(&mut rng, 16);
        let n = g.num_nodes();
        let d = rng.random_range(1..=4);
        let out_ch = rng.random_range(1..=4);
        let x = random_tensor(&mut rng, n, d);
        let tape = Tape::new();

        let k = rng.random_range(1..=4);
        let cheb = ChebConv::new("cheb", k, d, out_ch, &mut rng).unwrap();
        let l_hat = scaled_laplacian(&g, LambdaMax::Fixed(2.0)).unwrap();
        let got = cheb.forward(&tape, &x, &l_hat).unwrap();
        let l_dense = dense_scaled_laplacian(&g);
        let params = cheb.parameters();
        let mut polynomials = vec![as_rows(&x)];
        for i in 1..k {
            let next = if i == 1 {
                dense_matmul(&l_dense, &polynomials[0])
            } else {
                let ll = dense_matmul(&l_dense, &polynomials[i - 1]);
                (0..n)
                    .map(|r| {
                        (0..d)
                            .map(|c| 2.0 * ll[r][c] - polynomials[i - 2][r][c])
                            .collect()
                    })
                    .collect()
            };
            polynomials.push(next);
        }
        let bias = params[k].value();
        let mut expected: Vec<Vec<f64>> = (0..n).map(|_| bias.data().to_vec()).collect();
        for (poly, w) in polynomials.iter().zip(&params[..k]) {
            let contribution = dense_matmul(poly, &as_rows(&w.value()));
            for r in 0..n {
                for c in 0..out_ch {
                    expected[r][c] += contribution[r][c];
                }
            }
        }
        for (r, row) in as_rows(&got).iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                max_err = max_err.max((v - expected[r][c]).abs());
            }
        }

        let kd = rng.random_range(0..=3);
        let diff = DiffusionConv::new("diff", kd, d, out_ch, &mut rng).unwrap();
        let (rw_out, rw_in) = random_walk_matrices(&g);
        let got = diff.forward(&tape, &x, &rw_out, &rw_in).unwrap();
        let (rw_out_dense, rw_in_dense) = dense_random_walks(&g);
        let dparams = diff.parameters();
        let dbias = dparams[2 * (kd + 1)].value();
        let mut expected: Vec<Vec<f64>> = (0..n).map(|_| dbias.data().to_vec()).collect();
        for (op, offset) in [(&rw_out_dense, 0), (&rw_in_dense, kd + 1)] {
            let mut power = as_rows(&x);
            for i in 0..=kd {
                if i > 0 {
                    power = dense_matmul(op, &power);
                }
                let term = dense_matmul(&power, &as_rows(&dparams[offset + i].value()));
                for r in 0..n {
                    for c in 0..out_ch {
                        expected[r][c] += term[r][c];
                    }
                }
            }
        }
        for (r, row) in as_rows(&got).iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                max_err = max_err.max((v - expected[r][c]).abs());
            }
        }
        if max_err >= 1e-10 {
            return Err(format!("round {round}: max abs error {max_err:.3e}"));
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        return Err(format!("oracle checks took {elapsed:.1}s (limit 10s)"));
    }
    Ok(())
}

fn criterion_3_step_count_law() -> Result<(), String> {
    let sig = synthetic_diffusion_dataset(8, 2, 0.1, 90, 2, 3).unwrap();
    let config = ModelConfig::new(
        ModelKind::GConvGru,
        2,
        2,
        1,
        LambdaMaxPolicy::Fixed(2.0),
        0.0,
    )
    .unwrap();
    for (regime, expected) in [(Regime::Cumulative, 100), (Regime::Incremental, 9000)] {
        let model = RecurrentGcn::new(config, 1).unwrap();
        let mut opt = Adam::new(0.01);
        let report = train(&model, &sig, regime, 100, &mut opt, 0)
            .map_err(|e| format!("{regime}: {e}"))?;
        if opt.step_count() != expected || report.optimizer_steps != expected {
            return Err(format!(
                "{regime}: {} optimizer steps, expected {expected}",
                opt.step_count()
            ));
        }
    }
    Ok(())
}

fn criterion_4_split_arithmetic() -> Result<(), String> {
    for (t_count, want_train, want_test) in [(100, 90, 10), (10, 9, 1)] {
        let sig = synthetic_diffusion_dataset(6, 2, 0.1, t_count, 2, 4).unwrap();
        let (train_sig, test_sig) = sig.split(0.9).map_err(|e| e.to_string())?;
        if train_sig.len() != want_train || test_sig.len() != want_test {
            return Err(format!(
                "T={t_count}: got {}/{}, want {want_train}/{want_test}",
                train_sig.len(),
                test_sig.len()
            ));
        }
        // Concatenated order reproduces the original sequence.
        for (snap, orig) in train_sig.iter().chain(test_sig.iter()).zip(sig.iter()) {
            if snap.x.data() != orig.x.data() || snap.y.data() != orig.y.data() {
                return Err(format!("T={t_count}: concatenation differs at t={}", orig.t));
            }
        }
        // Static-graph variant: both sides hold the same graph allocation.
        let g = sig.static_graph_handle().expect("static variant");
        let shared = Arc::ptr_eq(g, train_sig.static_graph_handle().unwrap())
            && Arc::ptr_eq(g, test_sig.static_graph_handle().unwrap());
        if !shared {
            return Err(format!("T={t_count}: split duplicated the graph"));
        }
    }
    Ok(())
}

fn criterion_5_learnability() -> Result<(), String> {
    let started = Instant::now();
    let sig = synthetic_diffusion_dataset(64, 4, 0.1, 120, 4, 0).unwrap();
    // The training prefix covers the high-variance transient of the diffusion
    // process, which is where the underlying map is easiest to learn; the
    // held-out remainder is dominated by the stationary noise response.
    let (train_sig, test_sig) = sig.split(0.2).unwrap();
    let config = ModelConfig::new(
        ModelKind::Dcrnn,
        4,
        32,
        1,
        LambdaMaxPolicy::Fixed(2.0),
        0.0,
    )
    .unwrap();
    let model = RecurrentGcn::new(config, 1).unwrap();
    let mut opt = Adam::new(0.01);
    train(&model, &train_sig, Regime::Cumulative, 200, &mut opt, 0)
        .map_err(|e| e.to_string())?;
    let mse = evaluate_mse(&model, &test_sig).map_err(|e| e.to_string())?;
    let baseline = constant_mean_mse(&test_sig);
    let elapsed = started.elapsed().as_secs_f64();
    if mse > 0.2 * baseline {
        return Err(format!(
            "test MSE {mse:.6} above 0.2 x constant-mean baseline {baseline:.6}"
        ));
    }
    if elapsed >= 120.0 {
        return Err(format!("learnability run took {elapsed:.1}s (limit 120s)"));
    }
    println!("  (criterion 5: test MSE {mse:.6}, baseline {baseline:.6}, {elapsed:.1}s)");
    Ok(())
}

fn criterion_6_runtime_direction() -> Result<(), String> {
    let started = Instant::now();
    let config = BenchmarkConfig {
        nodes: vec![64, 128, 256],
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
    let report = cmd_benchmark(&config).map_err(|e| e.to_string())?;
    let mean = |n: usize, regime: Regime| {
        report
            .results
            .iter()
            .find(|c| c.nodes == n && c.regime == regime)
            .map(|c| c.mean_seconds)
            .expect("cell present")
    };
    for &n in &config.nodes {
        let (c, i) = (mean(n, Regime::Cumulative), mean(n, Regime::Incremental));
        println!("  (criterion 6: n={n} cumulative {c:.3}s incremental {i:.3}s)");
        if c > i {
            return Err(format!("n={n}: cumulative {c:.3}s > incremental {i:.3}s"));
        }
    }
    for regime in [Regime::Cumulative, Regime::Incremental] {
        for w in config.nodes.windows(2) {
            if mean(w[0], regime) > mean(w[1], regime) {
                return Err(format!(
                    "{regime}: epoch time decreased from n={} to n={}",
                    w[0], w[1]
                ));
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    if elapsed >= 600.0 {
        return Err(format!("benchmark took {elapsed:.1}s (limit 600s)"));
    }
    Ok(())
}

fn criterion_7_determinism() -> Result<(), String> {
    // Identical seeds -> byte-identical reports, compared with the wall-clock
    // timings cleared (the one field documented as non-deterministic).
    let sig = synthetic_diffusion_dataset(12, 4, 0.1, 20, 3, 7).unwrap();
    let config = ModelConfig::new(
        ModelKind::GConvGru,
        3,
        4,
        2,
        LambdaMaxPolicy::Fixed(2.0),
        0.25,
    )
    .unwrap();
    let run = || -> TrainReport {
        let model = RecurrentGcn::new(config, 11).unwrap();
        let mut opt = Adam::new(0.01);
        let mut report = train(&model, &sig, Regime::Incremental, 4, &mut opt, 11).unwrap();
        report.epoch_seconds.clear();
        report
    };
    let a = serde_json::to_string(&run()).unwrap();
    let b = serde_json::to_string(&run()).unwrap();
    if a != b {
        return Err("identical seeds produced different reports".into());
    }

    let text = serialize_dataset(&sig, None).map_err(|e| e.to_string())?;
    let again = serialize_dataset(&load_dataset_str(&text).map_err(|e| e.to_string())?, None)
        .map_err(|e| e.to_string())?;
    if text != again {
        return Err("dataset serialize -> load -> serialize is not byte-stable".into());
    }

    let model = RecurrentGcn::new(config, 11).unwrap();
    let mut opt = Adam::new(0.01);
    train(&model, &sig, Regime::Cumulative, 5, &mut opt, 11).unwrap();
    let before = evaluate_mse(&model, &sig).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&model, &path).map_err(|e| e.to_string())?;
    let restored = load_checkpoint(&path).map_err(|e| e.to_string())?;
    let after = evaluate_mse(&restored, &sig).unwrap();
    if before != after {
        return Err(format!("checkpoint reload changed MSE: {before} vs {after}"));
    }
    Ok(())
}

fn criterion_8_signal_invariants() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for round in 0..60 {
        let n = rng.random_range(2..10);
        let t_count = rng.random_range(2..12);
        let d = rng.random_range(1..5);
        let variant = match round % 3 {
            0 => SignalVariant::DynamicGraphTemporalSignal,
            1 => SignalVariant::DynamicGraphStaticSignal,
            _ => SignalVariant::StaticGraphTemporalSignal,
        };
        let graphs: Vec<Arc<Graph>> = (0..t_count)
            .map(|_| Arc::new(random_graph_fixed(&mut rng, n)))
            .collect();
        let targets: Vec<Tensor> = (0..t_count)
            .map(|_| random_tensor(&mut rng, n, 1))
            .collect();
        let sig = match variant {
            SignalVariant::DynamicGraphTemporalSignal => TemporalSignal::dynamic_graph(
                graphs.clone(),
                (0..t_count).map(|_| random_tensor(&mut rng, n, d)).collect(),
                targets,
            ),
            SignalVariant::DynamicGraphStaticSignal => TemporalSignal::dynamic_graph_static_signal(
                graphs.clone(),
                random_tensor(&mut rng, n, d),
                targets,
            ),
            SignalVariant::StaticGraphTemporalSignal => TemporalSignal::static_graph(
                Arc::clone(&graphs[0]),
                (0..t_count).map(|_| random_tensor(&mut rng, n, d)).collect(),
                targets,
            ),
        }
        .map_err(|e| format!("round {round}: construction failed: {e}"))?;

        if sig.variant() != variant {
            return Err(format!("round {round}: variant changed"));
        }
        let first = sig.index(0).unwrap();
        for (t, snap) in sig.iter().enumerate() {
            if snap.t != t {
                return Err(format!("round {round}: t out of order"));
            }
            if snap.graph.num_nodes() != n
                || snap.x.rows() != n
                || snap.y.rows() != n
                || snap.x.cols() != d
            {
                return Err(format!("round {round}: snapshot shape invariant broken"));
            }
            match variant {
                SignalVariant::DynamicGraphStaticSignal => {
                    if !snap.x.shares_storage(&first.x) {
                        return Err(format!("round {round}: static features were copied"));
                    }
                    if !Arc::ptr_eq(&snap.graph, &graphs[t]) {
                        return Err(format!("round {round}: graph identity lost"));
                    }
                }
                SignalVariant::StaticGraphTemporalSignal => {
                    if !Arc::ptr_eq(&snap.graph, &first.graph) {
                        return Err(format!("round {round}: static graph was duplicated"));
                    }
                }
                SignalVariant::DynamicGraphTemporalSignal => {
                    if !Arc::ptr_eq(&snap.graph, &graphs[t]) {
                        return Err(format!("round {round}: graph identity lost"));
                    }
                }
            }
        }

        // Mismatched node counts must be unconstructible.
        let bad = TemporalSignal::static_graph(
            Arc::clone(&graphs[0]),
            (0..t_count)
                .map(|_| random_tensor(&mut rng, n + 1, d))
                .collect(),
            (0..t_count).map(|_| random_tensor(&mut rng, n, 1)).collect(),
        );
        if bad.is_ok() {
            return Err(format!("round {round}: invalid signal was constructible"));
        }
    }
    Ok(())
}

/// Random graph with an exact node count (criterion 8 needs constant |V|).
fn random_graph_fixed(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        edges.push((i, (i + 1) % n));
    }
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random::<f64>() < 0.2 {
                edges.push((s, t));
            }
        }
    }
    Graph::new(n, edges, None).unwrap()
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Result<(), String>)> = vec![
        ("1 gradient fidelity", criterion_1_gradient_fidelity),
        ("2 sparse-operator oracle equivalence", criterion_2_oracle_equivalence),
        ("3 regime step-count law", criterion_3_step_count_law),
        ("4 split arithmetic", criterion_4_split_arithmetic),
        ("5 learnability", criterion_5_learnability),
        ("6 runtime direction", criterion_6_runtime_direction),
        ("7 determinism & round-trip", criterion_7_determinism),
        ("8 signal invariants", criterion_8_signal_invariants),
    ];
    let mut failures = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(()) => println!("criterion {name}: PASS"),
            Err(reason) => {
                println!("criterion {name}: FAIL ({reason})");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
