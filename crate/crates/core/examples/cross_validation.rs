//! Cross-validates every model on one dataset and prints the fold metrics.
//!
//! cargo run --release --example cross_validation

use privpref::datagen::{default_config, generate, GeneratorConfig};
use privpref::eval::{evaluate_model, DEFAULT_FOLDS};
use privpref::models::{ModelKind, ModelSettings};

fn main() -> privpref::Result<()> {
    let ds = generate(&GeneratorConfig { volume: 3_000, ..default_config() })?;
    let settings = ModelSettings::default();
    for kind in ModelKind::ALL {
        let report = evaluate_model(kind, &ds, &settings, DEFAULT_FOLDS, 42, "example")?;
        let folds: Vec<String> = report.folds.iter().map(|f| format!("{:.3}", f.metrics.accuracy)).collect();
        println!(
            "{:<5} folds [{}]  mean acc {:.4} recall {:.4} f1 {:.4}  test {:.4}",
            kind.id(),
            folds.join(" "),
            report.aggregate.accuracy,
            report.aggregate.macro_recall,
            report.aggregate.macro_f1,
            report.test.metrics.accuracy
        );
    }
    Ok(())
}
