use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use tempograph::autodiff::Tape;
use tempograph::data::synthetic_benchmark_sequence;
use tempograph::nn::{CellState, LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};
use tempograph::train::Adam;

fn main() {
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(256);
    let rounds: usize = std::env::args().nth(2).map(|s| s.parse().unwrap()).unwrap_or(8);
    let k_edges = 32.min(n / 2);
    let sig = synthetic_benchmark_sequence(n, k_edges, 32, 100, Some(0.1), 0).unwrap();
    let config = ModelConfig::new(ModelKind::GConvGru, 32, 32, 2, LambdaMaxPolicy::Fixed(2.0), 0.0).unwrap();
    let model = RecurrentGcn::new(config, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    let mut cum_fwd = f64::MAX; let mut cum_bwd = f64::MAX;
    let mut det_bwd = f64::MAX;
    let mut inc_fwd = f64::MAX; let mut inc_bwd = f64::MAX; let mut inc_stp = f64::MAX;
    for _ in 0..rounds {
        for detach in [false, true] {
            let t0 = Instant::now();
            let tape = Tape::new();
            let mut state: Option<CellState> = None;
            let mut cost: Option<tempograph::autodiff::Tensor> = None;
            for snap in sig.iter() {
                let (y_hat, ns) = model.forward(&tape, &snap, state.as_ref(), true, &mut rng).unwrap();
                state = Some(if detach { ns.detach() } else { ns });
                let loss = y_hat.mse_loss(&snap.y).unwrap();
                cost = Some(match cost { None => loss, Some(acc) => acc.add(&loss).unwrap() });
            }
            let cost = cost.unwrap().scale(1.0 / 100.0).unwrap();
            let fwd = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let grads = tape.backward_consuming(&cost).unwrap();
            let bwd = t1.elapsed().as_secs_f64();
            model.harvest(&grads);
            model.zero_grad();
            if detach { det_bwd = det_bwd.min(bwd); }
            else { cum_fwd = cum_fwd.min(fwd); cum_bwd = cum_bwd.min(bwd); }
        }
        // incremental
        let mut f = 0.0; let mut bw = 0.0; let mut st = 0.0;
        let mut opt = Adam::new(0.01);
        let mut state: Option<CellState> = None;
        for snap in sig.iter() {
            let ta = Instant::now();
            let tape = Tape::new();
            let (y_hat, ns) = model.forward(&tape, &snap, state.as_ref(), true, &mut rng).unwrap();
            state = Some(ns.detach());
            let loss = y_hat.mse_loss(&snap.y).unwrap();
            f += ta.elapsed().as_secs_f64();
            let tb = Instant::now();
            let grads = tape.backward(&loss).unwrap();
            bw += tb.elapsed().as_secs_f64();
            let tc = Instant::now();
            model.harvest(&grads);
            opt.step(&model.parameters());
            model.zero_grad();
            st += tc.elapsed().as_secs_f64();
        }
        inc_fwd = inc_fwd.min(f); inc_bwd = inc_bwd.min(bw); inc_stp = inc_stp.min(st);
    }
    println!("n={n} min over {rounds} rounds:");
    println!("  cumulative: fwd {cum_fwd:.3} bwd {cum_bwd:.3}");
    println!("  detached-tape bwd {det_bwd:.3}");
    println!("  incremental: fwd {inc_fwd:.3} bwd {inc_bwd:.3} step {inc_stp:.3}");
}
