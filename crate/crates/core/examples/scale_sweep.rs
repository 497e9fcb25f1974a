//! Runs the default data-scale sweep and prints the comparison tables.
//!
//! cargo run --release --example scale_sweep [-- 1000,5000]

use std::time::Instant;

use privpref::eval::{comparison_csv, reference_size, scale_sweep, SweepConfig};

fn main() -> privpref::Result<()> {
    let mut cfg = SweepConfig::default();
    if let Some(sizes) = std::env::args().nth(1) {
        cfg.sizes = sizes.split(',').map(|s| s.trim().parse().expect("size")).collect();
    }
    let started = Instant::now();
    let result = scale_sweep(&cfg)?;
    print!("{}", comparison_csv(&result.reports, false));

    if let Some(size) = reference_size(&result.reports) {
        println!("\nat {size} records:");
        for r in result.reports.iter().filter(|r| r.dataset_size == size) {
            println!("  {:<5} accuracy {:.4}  test {:.4}", r.model.id(), r.aggregate.accuracy, r.test.metrics.accuracy);
        }
    }

    let rewards = result.episode_log.rewards();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let n = rewards.len();
    if n >= 100 {
        println!(
            "\nepisode reward: first 50 mean {:.2}, last 50 mean {:.2}",
            mean(&rewards[..50]),
            mean(&rewards[n - 50..])
        );
    }
    println!("elapsed {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
