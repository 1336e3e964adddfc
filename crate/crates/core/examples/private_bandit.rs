//! End-to-end private learner on MNIST digits: contexts are split between
//! the compute parties, actions go only to the puller and rewards come back
//! secret-shared.
//!
//! Usage: `private_bandit [steps] [epsilon]`

use std::path::PathBuf;

use mpc_bandit::bandit::{plaintext_reference, run_episode, EpisodeConfig};
use mpc_bandit::envs::{load_mnist_pca, Environment, MnistEnv, MnistOptions};

fn main() -> mpc_bandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let epsilon: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0.1);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let data = load_mnist_pca(&dir, &MnistOptions::default())?;
    println!(
        "PCA to {} dims keeps {:.1}% of the pixel variance",
        data.train.dim(),
        100.0 * data.pca.explained_variance_ratio
    );
    let env = MnistEnv::new(&data.train, 0, Some(steps));
    let cfg = EpisodeConfig {
        steps: Some(steps),
        epsilon,
        ..EpisodeConfig::default()
    };
    let out = run_episode(&env, &cfg)?;
    let plain = plaintext_reference(&env, Some(steps), epsilon, cfg.seed, cfg.fx)?;
    let curve = out.curve();
    for t in [steps / 10, steps / 2, steps] {
        if t > 0 {
            println!("step {t:5}: running average reward {:.3}", curve[t - 1]);
        }
    }
    let agree = out.arms().iter().zip(&plain.records).filter(|(a, r)| **a == r.arm).count();
    println!("plaintext learner picks the same arm on {agree}/{steps} steps");
    println!("uniform policy would score {:.3}", env.uniform_policy_reward());
    println!("rounds per step: {}", out.ledger.total_rounds() / steps.max(1) as u64);
    for (label, e) in out.ledger.entries() {
        println!("  {label:<12} {:6} rounds {:10} bytes", e.rounds, e.bytes_sent);
    }
    Ok(())
}
