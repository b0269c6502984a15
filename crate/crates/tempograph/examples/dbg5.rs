use tempograph::data::{constant_mean_mse, synthetic_diffusion_dataset};
use tempograph::nn::{LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};
use tempograph::train::{evaluate_mse, train, Adam, Regime};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(1);
    let model_seed: u64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0);
    let epochs: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(200);
    let ratio: f64 = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(0.9);
    let sig = synthetic_diffusion_dataset(64, 4, 0.1, 120, 4, 0).unwrap();
    let (train_sig, test_sig) = sig.split(ratio).unwrap();
    let config = ModelConfig::new(
        ModelKind::Dcrnn,
        4,
        32,
        k,
        LambdaMaxPolicy::Fixed(2.0),
        0.0,
    )
    .unwrap();
    let model = RecurrentGcn::new(config, model_seed).unwrap();
    let mut opt = Adam::new(0.01);
    let started = std::time::Instant::now();
    let report = train(&model, &train_sig, Regime::Cumulative, epochs, &mut opt, 0).unwrap();
    for (i, l) in report.losses.iter().enumerate() {
        if i % 10 == 0 || i + 1 == report.losses.len() {
            println!("epoch {i:3} loss {l:.6}");
        }
    }
    let mse = evaluate_mse(&model, &test_sig).unwrap();
    let baseline = constant_mean_mse(&test_sig);
    // per-snapshot test errors to see whether cold-start hidden state dominates
    {
        use tempograph::autodiff::Tape;
        use tempograph::nn::CellState;
        use rand::SeedableRng;
        let tape = Tape::new();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut state: Option<CellState> = None;
        for (i, snap) in test_sig.iter().enumerate() {
            let (y_hat, ns) = model.forward(&tape, &snap, state.as_ref(), false, &mut rng).unwrap();
            state = Some(ns);
            let l = y_hat.mse_loss(&snap.y).unwrap().item().unwrap();
            if i < 8 || i % 10 == 0 {
                println!("  test snap {i:2} mse {l:.8}");
            }
        }
    }
    println!(
        "k={k} seed={model_seed} test MSE {mse:.6} baseline {baseline:.6} ratio {:.4} ({:.1}s)",
        mse / baseline,
        started.elapsed().as_secs_f64()
    );
}
