//! Trains the two-hidden-layer perceptron and prints the loss curve.
//!
//! cargo run --release --example mlp_training

use privpref::datagen::{default_config, generate, GeneratorConfig};
use privpref::eval::{make_split, SplitSpec};
use privpref::models::{mlp_train, Classifier, MlpConfig};

fn main() -> privpref::Result<()> {
    let ds = generate(&GeneratorConfig { volume: 5_000, ..default_config() })?;
    let (train, val, test) = make_split(&ds, &SplitSpec::default())?;
    let model = mlp_train(&MlpConfig::default(), &train)?;

    for (epoch, loss) in model.epoch_losses.iter().enumerate().step_by(5) {
        println!("epoch {:>2}  loss {loss:.4}", epoch + 1);
    }
    println!("validation loss {:.4}", model.dataset_loss(&val)?);
    let correct = test.records.iter().filter(|r| Some(model.predict(r)) == r.label).count();
    println!("held-out accuracy {:.4}", correct as f64 / test.len() as f64);
    Ok(())
}
