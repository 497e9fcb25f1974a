//! Generates the benchmark dataset and prints its shape.
//!
//! cargo run --example generate_dataset [-- out.csv]

use privpref::data::{save_dataset, PrivacyChoice};
use privpref::datagen::{default_config, generate};

fn main() -> privpref::Result<()> {
    let cfg = default_config();
    let ds = generate(&cfg)?;
    println!("{} records, {} features, {} missing cells", ds.len(), ds.schema.features.len(), ds.missing_cells());

    let counts = ds.label_counts();
    for (c, choice) in PrivacyChoice::ALL.iter().enumerate() {
        println!("  {:<5} {:>5} ({:.3})", choice.to_string(), counts[c], counts[c] as f64 / ds.len() as f64);
    }
    for p in &cfg.personas {
        let n = ds.records.iter().filter(|r| r.persona_id == Some(p.persona_id)).count();
        println!("  persona {:<20} {n:>5}", p.name);
    }

    if let Some(path) = std::env::args().nth(1) {
        save_dataset(&ds, &path)?;
        println!("wrote {path}");
    }
    Ok(())
}
