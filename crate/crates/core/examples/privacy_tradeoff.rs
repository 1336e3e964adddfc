//! Reward of the secure learner on MNIST as the exploration rate (and hence
//! the per-step privacy loss) varies.

use std::path::PathBuf;

use mpc_bandit::bandit::{plaintext_reference, run_episode, EpisodeConfig};
use mpc_bandit::envs::{load_mnist_pca, MnistEnv, MnistOptions};
use mpc_bandit::privacy::privacy_loss;
use mpc_bandit::ring::FixedPointConfig;

fn main() -> mpc_bandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let secure = args.next().is_none_or(|s| s != "plain");
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let data = load_mnist_pca(&dir, &MnistOptions::default())?;
    for eps in [0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5] {
        let mut rewards = Vec::new();
        for seed in 0..seeds {
            let env = MnistEnv::new(&data.train, seed, Some(steps));
            let r = if secure {
                let cfg = EpisodeConfig {
                    epsilon: eps,
                    steps: Some(steps),
                    seed,
                    ..EpisodeConfig::default()
                };
                run_episode(&env, &cfg)?.mean_reward()
            } else {
                let run = plaintext_reference(&env, Some(steps), eps, seed, FixedPointConfig::default())?;
                run.records.iter().map(|r| r.reward).sum::<f64>() / steps as f64
            };
            rewards.push(r);
        }
        let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
        let eta = privacy_loss(eps, 10).map(|v| format!("{v:.3}")).unwrap_or_default();
        println!("epsilon {eps:5}  eta {eta:>8}  mean {mean:.4}  per seed {rewards:.4?}");
    }
    Ok(())
}
