//! Trains a Q-table against the simulated user population and prints the
//! reward curve in blocks of 25 episodes.
//!
//! cargo run --release --example q_learning

use privpref::datagen::default_config;
use privpref::rl::{train_q, PersonaEnv, RlConfig};

fn main() -> privpref::Result<()> {
    let mut env = PersonaEnv::new(&default_config())?;
    let cfg = RlConfig::default();
    let (q, log) = train_q(&mut env, &cfg)?;

    for (i, block) in log.rewards().chunks(25).enumerate() {
        let mean = block.iter().sum::<f64>() / block.len() as f64;
        println!("episodes {:>3}-{:<3} mean reward {mean:>6.2}", i * 25 + 1, i * 25 + block.len());
    }
    println!("cumulative reward {:.0}", log.cumulative_reward.last().copied().unwrap_or(0.0));

    let space = env.space();
    println!("greedy actions for a few states:");
    for s in (0..space.len()).step_by(37) {
        println!("  {:<40} {:?}", space.key(&space.state(s)), q.greedy(s));
    }
    Ok(())
}
