//! Average reward of the secure learner as the fixed-point precision varies.
//!
//! Too few fractional bits drown the model in rounding noise; too many make
//! truncation of large products fail.
//!
//! Usage: `precision_sweep [steps] [seeds]`

use std::path::PathBuf;

use mpc_bandit::bandit::{plaintext_reference, run_episode, EpisodeConfig};
use mpc_bandit::envs::{build_kmeans_env, load_mnist_pca, Environment, MnistOptions};
use mpc_bandit::ring::FixedPointConfig;

fn main() -> mpc_bandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let data = load_mnist_pca(&dir, &MnistOptions::default())?;
    let env = build_kmeans_env(&data.train, 10, 0.5, 0, Some(steps))?;
    let plain = plaintext_reference(&env, Some(steps), 0.1, 0, FixedPointConfig::default())?;
    let plain_mean = plain.records.iter().map(|r| r.reward).sum::<f64>() / steps as f64;
    println!("plaintext {plain_mean:.4}   uniform policy {:.4}", env.uniform_policy_reward());
    for bits in (6..=28).step_by(2) {
        let mut rewards = Vec::new();
        for seed in 0..seeds {
            let cfg = EpisodeConfig {
                fx: FixedPointConfig::new(bits)?,
                steps: Some(steps),
                epsilon: 0.1,
                seed,
                ..EpisodeConfig::default()
            };
            rewards.push(run_episode(&env, &cfg)?.mean_reward());
        }
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        println!("L = {bits:2}  mean reward {mean:.4}  per seed {rewards:.4?}");
    }
    Ok(())
}
