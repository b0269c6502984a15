use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use tempograph::autodiff::Tape;
use tempograph::data::synthetic_benchmark_sequence;
use tempograph::nn::{CellState, LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};
use tempograph::train::Adam;

fn main() {
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(64);
    let k_edges = 32.min(n / 2);
    let sig = synthetic_benchmark_sequence(n, k_edges, 32, 100, Some(0.1), 0).unwrap();
    let config = ModelConfig::new(
        ModelKind::GConvGru,
        32,
        32,
        2,
        LambdaMaxPolicy::Fixed(2.0),
        0.0,
    )
    .unwrap();
    let model = RecurrentGcn::new(config, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    for round in 0..3 {
        // cumulative epoch
        let t0 = Instant::now();
        let tape = Tape::new();
        let mut state: Option<CellState> = None;
        let mut cost: Option<tempograph::autodiff::Tensor> = None;
        for snap in sig.iter() {
            let (y_hat, ns) = model.forward(&tape, &snap, state.as_ref(), true, &mut rng).unwrap();
            state = Some(ns);
            let loss = y_hat.mse_loss(&snap.y).unwrap();
            cost = Some(match cost {
                None => loss,
                Some(acc) => acc.add(&loss).unwrap(),
            });
        }
        let cost = cost.unwrap().scale(1.0 / 100.0).unwrap();
        let fwd = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let grads = tape.backward(&cost).unwrap();
        let bwd = t1.elapsed().as_secs_f64();
        let t2 = Instant::now();
        model.harvest(&grads);
        let mut opt = Adam::new(0.01);
        opt.step(&model.parameters());
        model.zero_grad();
        let stp = t2.elapsed().as_secs_f64();
        println!("round {round} cumulative: fwd {fwd:.3} bwd {bwd:.3} step {stp:.3} tape {} nodes", tape.len());

        // incremental epoch
        let t0 = Instant::now();
        let mut fwd_i = 0.0;
        let mut bwd_i = 0.0;
        let mut stp_i = 0.0;
        let mut opt = Adam::new(0.01);
        let mut state: Option<CellState> = None;
        for snap in sig.iter() {
            let ta = Instant::now();
            let tape = Tape::new();
            let (y_hat, ns) = model.forward(&tape, &snap, state.as_ref(), true, &mut rng).unwrap();
            state = Some(ns.detach());
            let loss = y_hat.mse_loss(&snap.y).unwrap();
            fwd_i += ta.elapsed().as_secs_f64();
            let tb = Instant::now();
            let grads = tape.backward(&loss).unwrap();
            bwd_i += tb.elapsed().as_secs_f64();
            let tc = Instant::now();
            model.harvest(&grads);
            opt.step(&model.parameters());
            model.zero_grad();
            stp_i += tc.elapsed().as_secs_f64();
        }
        let total = t0.elapsed().as_secs_f64();
        println!("round {round} incremental: fwd {fwd_i:.3} bwd {bwd_i:.3} step {stp_i:.3} total {total:.3}");
    }
}
