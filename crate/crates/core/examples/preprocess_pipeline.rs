//! Runs deduplication, imputation, k-anonymity, randomized response and
//! class rebalancing over a generated dataset.
//!
//! cargo run --example preprocess_pipeline

use std::collections::BTreeMap;

use privpref::data::PrivacyChoice;
use privpref::datagen::{default_config, generate, GeneratorConfig};
use privpref::preprocess::{run_pipeline, GeneralizationHierarchy, PreprocessConfig};

fn main() -> privpref::Result<()> {
    let ds = generate(&GeneratorConfig { volume: 2_000, duplicate_rate: 0.05, ..default_config() })?;
    let before = ds.label_counts();
    let largest = *before.iter().max().unwrap();

    let cfg = PreprocessConfig {
        anonymity_k: 10,
        augment_target: Some(PrivacyChoice::ALL.iter().map(|&c| (c, largest)).collect::<BTreeMap<_, _>>()),
        ..PreprocessConfig::default()
    };
    let hierarchy = GeneralizationHierarchy::default_for(&ds.schema);
    let (out, report) = run_pipeline(&ds, &hierarchy, &cfg)?;

    println!("steps: {}", report.ops.join(" -> "));
    println!("records {} -> {}", report.input_records, report.output_records);
    println!("duplicates removed {}, cells imputed {}", report.duplicates_removed, report.imputed_cells);
    println!("generalization levels {:?}, suppressed {}", report.anonymization_levels, report.suppressed_count);
    println!("labels {:?} -> {:?}", before, out.label_counts());
    println!("first record: {:?}", out.records[0].values);
    Ok(())
}
