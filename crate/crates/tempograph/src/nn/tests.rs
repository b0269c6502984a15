use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

use super::{
    CellState, ChebConv, Checkpoint, DiffusionConv, LambdaMaxPolicy, ModelConfig, ModelKind,
    RecurrentGcn,
};
use crate::autodiff::{Tape, Tensor};
use crate::graph::{random_walk_matrices, scaled_laplacian, Graph, LambdaMax};
use crate::nn::cells::{DcrnnCell, GConvGruCell, GConvLstmCell};
use crate::signal::Snapshot;

fn triangle() -> Graph {
    Graph::new(
        3,
        vec![(0, 1), (1, 0), (1, 2), (2, 1), (0, 2), (2, 0)],
        None,
    )
    .unwrap()
}

fn matmul_dense(a: &Tensor, b: &Tensor) -> Tensor {
    a.matmul(b).unwrap()
}

#[test]
fn cheb_conv_k1_is_plain_linear_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let conv = ChebConv::new("c", 1, 2, 3, &mut rng).unwrap();
    let l_hat = scaled_laplacian(&triangle(), LambdaMax::Fixed(2.0)).unwrap();
    let tape = Tape::new();
    let x = Tensor::from_vec(3, 2, vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]).unwrap();
    let out = conv.forward(&tape, &x, &l_hat).unwrap();
    // K = 1 keeps only the T_0 = X term: out = X W_0 + b, independent of L.
    let w0 = conv.parameters()[0].value();
    let expected = matmul_dense(&x, &w0);
    for (a, e) in out.data().iter().zip(expected.data()) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn cheb_conv_k2_adds_laplacian_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let conv = ChebConv::new("c", 2, 2, 2, &mut rng).unwrap();
    let l_hat = scaled_laplacian(&triangle(), LambdaMax::Fixed(2.0)).unwrap();
    let tape = Tape::new();
    let x = Tensor::from_vec(3, 2, vec![1.0, -1.0, 0.5, 0.25, -0.75, 2.0]).unwrap();
    let out = conv.forward(&tape, &x, &l_hat).unwrap();
    let w0 = conv.parameters()[0].value();
    let w1 = conv.parameters()[1].value();
    let lx = matmul_dense(&l_hat.to_dense(), &x);
    let expected = matmul_dense(&x, &w0)
        .add(&matmul_dense(&lx, &w1))
        .unwrap();
    for (a, e) in out.data().iter().zip(expected.data()) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn cheb_conv_recursion_matches_dense_polynomials() {
    // T_2 = 2 L (L X) - X must come out of the three-term recursion.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let conv = ChebConv::new("c", 3, 1, 1, &mut rng).unwrap();
    let l_hat = scaled_laplacian(&triangle(), LambdaMax::Fixed(2.0)).unwrap();
    let tape = Tape::new();
    let x = Tensor::from_vec(3, 1, vec![1.0, -2.0, 0.5]).unwrap();
    let out = conv.forward(&tape, &x, &l_hat).unwrap();
    let l = l_hat.to_dense();
    let t1 = matmul_dense(&l, &x);
    let t2 = matmul_dense(&l, &t1).scale(2.0).unwrap().sub(&x).unwrap();
    let params = conv.parameters();
    let expected = matmul_dense(&x, &params[0].value())
        .add(&matmul_dense(&t1, &params[1].value()))
        .unwrap()
        .add(&matmul_dense(&t2, &params[2].value()))
        .unwrap();
    for (a, e) in out.data().iter().zip(expected.data()) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn cheb_conv_rejects_zero_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(ChebConv::new("c", 0, 2, 2, &mut rng).is_err());
}

#[test]
fn diffusion_conv_k0_ignores_the_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let conv = DiffusionConv::new("d", 0, 2, 2, &mut rng).unwrap();
    let (rw_out, rw_in) = random_walk_matrices(&triangle());
    let tape = Tape::new();
    let x = Tensor::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
    let out = conv.forward(&tape, &x, &rw_out, &rw_in).unwrap();
    let params = conv.parameters();
    // Order 0 uses only the identity power on both walks.
    let expected = matmul_dense(&x, &params[0].value())
        .add(&matmul_dense(&x, &params[1].value()))
        .unwrap();
    for (a, e) in out.data().iter().zip(expected.data()) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn diffusion_conv_matches_dense_power_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let conv = DiffusionConv::new("d", 2, 2, 3, &mut rng).unwrap();
    let g = Graph::new(
        4,
        vec![(0, 1), (1, 2), (2, 3), (3, 0), (1, 0)],
        Some(vec![1.0, 2.0, 0.5, 1.0, 3.0]),
    )
    .unwrap();
    let (rw_out, rw_in) = random_walk_matrices(&g);
    let tape = Tape::new();
    let x = Tensor::from_vec(4, 2, (0..8).map(|i| 0.1 * i as f64 - 0.3).collect()).unwrap();
    let out = conv.forward(&tape, &x, &rw_out, &rw_in).unwrap();

    let params = conv.parameters();
    let mut expected = Tensor::zeros(4, 3);
    for (op, offset) in [(&rw_out, 0), (&rw_in, 3)] {
        let dense = op.to_dense();
        let mut power = x.clone();
        for i in 0..=2 {
            if i > 0 {
                power = matmul_dense(&dense, &power);
            }
            expected = expected
                .add(&matmul_dense(&power, &params[offset + i].value()))
                .unwrap();
        }
    }
    for (a, e) in out.data().iter().zip(expected.data()) {
        assert!((a - e).abs() < 1e-10);
    }
}

#[test]
fn zero_input_cells_map_zero_state_to_zero() {
    // All biases start at zero, so with x = 0 every gate pre-activation is
    // zero and the new hidden state must be exactly zero for all three cells.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let l_hat = scaled_laplacian(&triangle(), LambdaMax::Fixed(2.0)).unwrap();
    let (rw_out, rw_in) = random_walk_matrices(&triangle());
    let x = Tensor::zeros(3, 2);
    let tape = Tape::new();

    let gru = GConvGruCell::new("g", 2, 2, 4, &mut rng).unwrap();
    let h = gru.forward(&tape, &x, None, &l_hat).unwrap();
    assert_eq!(h.data(), vec![0.0; 12].as_slice());

    let lstm = GConvLstmCell::new("l", 2, 2, 4, &mut rng).unwrap();
    let (h, c) = lstm.forward(&tape, &x, None, &l_hat).unwrap();
    assert_eq!(h.data(), vec![0.0; 12].as_slice());
    assert_eq!(c.data(), vec![0.0; 12].as_slice());

    let dcrnn = DcrnnCell::new("d", 1, 2, 4, &mut rng).unwrap();
    let h = dcrnn.forward(&tape, &x, None, &rw_out, &rw_in).unwrap();
    assert_eq!(h.data(), vec![0.0; 12].as_slice());
}

#[test]
fn cells_reject_misshapen_hidden_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let l_hat = scaled_laplacian(&triangle(), LambdaMax::Fixed(2.0)).unwrap();
    let gru = GConvGruCell::new("g", 1, 2, 4, &mut rng).unwrap();
    let tape = Tape::new();
    let x = Tensor::zeros(3, 2);
    let bad_h = Tensor::zeros(3, 5);
    assert!(gru.forward(&tape, &x, Some(&bad_h), &l_hat).is_err());
}

fn snapshot(x: Tensor, y: Tensor) -> Snapshot {
    Snapshot {
        graph: Arc::new(triangle()),
        x,
        y,
        t: 0,
        mask: None,
    }
}

fn config(model: ModelKind) -> ModelConfig {
    ModelConfig::new(model, 2, 4, 2, LambdaMaxPolicy::Fixed(2.0), 0.0).unwrap()
}

#[test]
fn model_forward_shapes_and_state_threading() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for kind in [ModelKind::GConvGru, ModelKind::GConvLstm, ModelKind::Dcrnn] {
        let model = RecurrentGcn::new(config(kind), 7).unwrap();
        let tape = Tape::new();
        let snap = snapshot(Tensor::ones(3, 2), Tensor::zeros(3, 1));
        let (y1, s1) = model.forward(&tape, &snap, None, false, &mut rng).unwrap();
        assert_eq!(y1.shape(), (3, 1));
        let (y2, _) = model
            .forward(&tape, &snap, Some(&s1), false, &mut rng)
            .unwrap();
        assert_eq!(y2.shape(), (3, 1));
        // Threaded state changes the prediction.
        assert_ne!(y1.data(), y2.data());
    }
}

#[test]
fn model_rejects_wrong_input_width_and_wrong_state_kind() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = RecurrentGcn::new(config(ModelKind::GConvLstm), 7).unwrap();
    let tape = Tape::new();
    let bad = snapshot(Tensor::ones(3, 5), Tensor::zeros(3, 1));
    assert!(model.forward(&tape, &bad, None, false, &mut rng).is_err());
    let snap = snapshot(Tensor::ones(3, 2), Tensor::zeros(3, 1));
    let wrong_state = CellState::Hidden(Tensor::zeros(3, 4));
    assert!(model
        .forward(&tape, &snap, Some(&wrong_state), false, &mut rng)
        .is_err());
}

#[test]
fn identical_seeds_give_identical_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let a = RecurrentGcn::new(config(ModelKind::Dcrnn), 42).unwrap();
    let b = RecurrentGcn::new(config(ModelKind::Dcrnn), 42).unwrap();
    for (pa, pb) in a.parameters().iter().zip(b.parameters()) {
        assert_eq!(pa.name(), pb.name());
        assert_eq!(pa.value().data(), pb.value().data());
    }
    let c = RecurrentGcn::new(config(ModelKind::Dcrnn), 43).unwrap();
    let differs = a
        .parameters()
        .iter()
        .zip(c.parameters())
        .any(|(pa, pc)| pa.value().data() != pc.value().data());
    assert!(differs);
    let tape = Tape::new();
    let snap = snapshot(Tensor::ones(3, 2), Tensor::zeros(3, 1));
    let (ya, _) = a.forward(&tape, &snap, None, false, &mut rng).unwrap();
    let (yb, _) = b.forward(&tape, &snap, None, false, &mut rng).unwrap();
    assert_eq!(ya.data(), yb.data());
}

#[test]
fn config_validation_and_map_round_trip() {
    assert!(ModelConfig::new(
        ModelKind::GConvGru,
        0,
        4,
        2,
        LambdaMaxPolicy::Fixed(2.0),
        0.0
    )
    .is_err());
    assert!(ModelConfig::new(
        ModelKind::GConvGru,
        2,
        4,
        0,
        LambdaMaxPolicy::Fixed(2.0),
        0.0
    )
    .is_err());
    assert!(
        ModelConfig::new(ModelKind::Dcrnn, 2, 4, 2, LambdaMaxPolicy::Exact, 1.0).is_err()
    );
    let cfg = ModelConfig::new(
        ModelKind::GConvLstm,
        3,
        8,
        2,
        LambdaMaxPolicy::Exact,
        0.25,
    )
    .unwrap();
    let map = cfg.to_map();
    assert_eq!(
        map.iter().map(|(k, _)| k.as_str()).collect::<Vec<_>>(),
        ["model", "in_channels", "filters", "k", "lambda_max", "dropout"]
    );
    assert_eq!(ModelConfig::from_map(&map).unwrap(), cfg);
}

#[test]
fn checkpoint_round_trip_reproduces_forward_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = RecurrentGcn::new(config(ModelKind::GConvGru), 5).unwrap();
    // Perturb away from the seeded initialization so the reload is doing work.
    model.parameters()[0].update(|v, _| v + 0.125);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    super::save_checkpoint(&model, &path).unwrap();
    let restored = super::load_checkpoint(&path).unwrap();
    let tape = Tape::new();
    let snap = snapshot(Tensor::ones(3, 2), Tensor::zeros(3, 1));
    let (y0, _) = model.forward(&tape, &snap, None, false, &mut rng).unwrap();
    let (y1, _) = restored
        .forward(&tape, &snap, None, false, &mut rng)
        .unwrap();
    assert_eq!(y0.data(), y1.data());
}

#[test]
fn checkpoint_rejects_inconsistent_files() {
    let model = RecurrentGcn::new(config(ModelKind::Dcrnn), 5).unwrap();
    let mut cp = Checkpoint::from_model(&model);
    cp.schema_version = 99;
    assert!(cp.into_model().is_err());

    let mut cp = Checkpoint::from_model(&model);
    cp.params.pop();
    assert!(cp.into_model().is_err());

    let mut cp = Checkpoint::from_model(&model);
    cp.params[0].name = "bogus".into();
    assert!(cp.into_model().is_err());

    let mut cp = Checkpoint::from_model(&model);
    cp.params[0].rows += 1;
    let extra = cp.params[0].cols;
    cp.params[0].values.extend(vec![0.0; extra]);
    assert!(cp.into_model().is_err());
}
