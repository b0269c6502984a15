//! Model persistence: train briefly, save a checkpoint, reload it and verify
//! the reloaded model evaluates to exactly the same MSE.

use tempograph::data::synthetic_diffusion_dataset;
use tempograph::nn::{
    load_checkpoint, save_checkpoint, LambdaMaxPolicy, ModelConfig, ModelKind, RecurrentGcn,
};
use tempograph::train::{evaluate_mse, train, Adam, Regime};

fn main() -> tempograph::Result<()> {
    let dataset = synthetic_diffusion_dataset(16, 4, 0.1, 40, 3, 9)?;
    let (train_sig, test_sig) = dataset.split(0.9)?;

    let config = ModelConfig::new(
        ModelKind::Dcrnn,
        dataset.num_features(),
        8,
        1,
        LambdaMaxPolicy::Fixed(2.0),
        0.0,
    )?;
    let model = RecurrentGcn::new(config, 3)?;
    let mut opt = Adam::new(0.01);
    train(&model, &train_sig, Regime::Cumulative, 20, &mut opt, 3)?;
    let mse = evaluate_mse(&model, &test_sig)?;

    let dir = std::env::temp_dir().join("tempograph-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dcrnn.json");
    save_checkpoint(&model, &path)?;
    println!("saved checkpoint to {}", path.display());

    let restored = load_checkpoint(&path)?;
    let restored_mse = evaluate_mse(&restored, &test_sig)?;
    println!("MSE before save: {mse}");
    println!("MSE after load:  {restored_mse}");
    assert_eq!(mse, restored_mse);

    println!("hyperparameters:");
    for (name, value) in restored.inspect_hyperparameters() {
        println!("  {name} = {value}");
    }
    Ok(())
}
