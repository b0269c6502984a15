//! Trains the same model under both backpropagation regimes on a synthetic
//! diffusion dataset and contrasts loss curves and optimizer step counts:
//! cumulative takes one step per epoch, incremental one step per snapshot.

use tempograph::data::{constant_mean_mse, synthetic_diffusion_dataset};
use tempograph::nn::{LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn};
use tempograph::train::{evaluate_mse, train, Adam, Regime};

fn main() -> tempograph::Result<()> {
    let dataset = synthetic_diffusion_dataset(32, 4, 0.1, 60, 4, 0)?;
    let (train_sig, test_sig) = dataset.split(0.9)?;
    println!(
        "dataset: T={} ({} train / {} test), baseline constant-mean MSE {:.4}",
        dataset.len(),
        train_sig.len(),
        test_sig.len(),
        constant_mean_mse(&test_sig)
    );

    for regime in [Regime::Cumulative, Regime::Incremental] {
        let config = ModelConfig::new(
            ModelKind::GConvGru,
            dataset.num_features(),
            16,
            2,
            LambdaMaxPolicy::Fixed(2.0),
            0.0,
        )?;
        let model = RecurrentGcn::new(config, 42)?;
        let mut opt = Adam::new(0.01);
        let epochs = 30;
        let report = train(&model, &train_sig, regime, epochs, &mut opt, 42)?;
        let mse = evaluate_mse(&model, &test_sig)?;
        println!(
            "{regime:>11}: {} epochs -> {} optimizer steps, loss {:.4} -> {:.4}, test MSE {:.4}",
            epochs,
            report.optimizer_steps,
            report.losses[0],
            report.losses.last().unwrap(),
            mse
        );
    }
    Ok(())
}
