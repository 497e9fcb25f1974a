//! Fits naive Bayes on the four-row hand example, then on generated data.
//!
//! cargo run --example naive_bayes

use privpref::data::{Feature, FeatureSchema, LabeledDataset, PrivacyChoice, PrivacyRecord, Value};
use privpref::datagen::{default_config, generate, GeneratorConfig};
use privpref::eval::{make_split, SplitSpec};
use privpref::models::{nb_fit, nb_posterior, Classifier};

fn main() -> privpref::Result<()> {
    use PrivacyChoice::*;
    let schema = FeatureSchema::new(vec![Feature::categorical("context", &["social", "finance"])])?;
    let rows = [("social", Allow), ("social", Allow), ("finance", Deny), ("social", Deny)];
    let records = rows
        .iter()
        .enumerate()
        .map(|(i, (c, y))| PrivacyRecord::new(i as u64, vec![Value::cat(c)], Some(*y)))
        .collect();
    let toy = LabeledDataset::new(schema, records, "toy")?;
    let model = nb_fit(&toy, 1.0)?;
    println!("priors {:?}", model.class_priors);
    let query = PrivacyRecord::new(9, vec![Value::cat("social")], None);
    println!("P(y | social) = {:?}", nb_posterior(&model, &query));

    let ds = generate(&GeneratorConfig { volume: 5_000, ..default_config() })?;
    let (train, _, test) = make_split(&ds, &SplitSpec::default())?;
    let model = nb_fit(&train, 1.0)?;
    let correct = test.records.iter().filter(|r| Some(model.predict(r)) == r.label).count();
    println!("held-out accuracy {:.4} on {} records", correct as f64 / test.len() as f64, test.len());
    Ok(())
}
