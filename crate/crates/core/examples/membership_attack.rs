//! Membership-inference advantage against learner checkpoints on MNIST.
//!
//! Usage: `membership_attack [steps] [runs] [probes] [epsilon]`

use std::path::PathBuf;

use mpc_bandit::envs::{load_mnist_pca, MnistOptions};
use mpc_bandit::privacy::{attack_curve, AttackConfig};

fn main() -> mpc_bandit::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut next = |d: f64| args.next().and_then(|s| s.parse().ok()).unwrap_or(d);
    let steps = next(2000.0) as usize;
    let runs = next(20.0) as usize;
    let probes = next(1000.0) as usize;
    let epsilon = next(0.1);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let data = load_mnist_pca(&dir, &MnistOptions::default())?;
    let checkpoints: Vec<usize> = [20, 50, 100, 200, 500, 1000, 2000]
        .into_iter()
        .filter(|&c| c <= steps)
        .collect();
    let cfg = AttackConfig {
        epsilon,
        steps,
        checkpoints,
        probes,
        runs,
        seed: 0,
    };
    println!("step,epsilon,advantage,ci95,median");
    for p in attack_curve(&data.train, &data.test, &cfg)? {
        println!("{},{},{:.4},{:.4},{:.4}", p.step, p.epsilon, p.advantage, p.ci, p.median());
    }
    Ok(())
}
