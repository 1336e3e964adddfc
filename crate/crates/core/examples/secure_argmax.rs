//! One-hot argmax over shared scores, with ties broken by a shared random
//! permutation.

use mpc_bandit::protocols::{argmax_one_hot, argmax_rounds_two_party, run_compute};
use mpc_bandit::ring::{FixedPointConfig, RingElement};
use mpc_bandit::sharing::share_arithmetic;
use mpc_bandit::tensor::{RingTensor, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> mpc_bandit::Result<()> {
    let fx = FixedPointConfig::default();
    let scores = [0.3, 1.7, -0.4, 1.7, 0.9];
    let n = scores.len();
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let x = share_arithmetic(&RingTensor::encode(Shape::vector(n), &scores, fx)?, 2, &mut rng)?;
    for (trial, gamma) in [[1u64, 2, 3, 4, 5], [5, 4, 3, 2, 1]].iter().enumerate() {
        let g = share_arithmetic(&RingTensor::from_u64(Shape::vector(n), gamma.to_vec())?, 2, &mut rng)?;
        let out = run_compute(2, trial as u64, fx, |p| {
            let before = p.rounds();
            let y = argmax_one_hot(p, x[p.id()].data(), g[p.id()].data())?;
            Ok((y, p.rounds() - before))
        })?;
        let one_hot: Vec<u64> = (0..n)
            .map(|i| out.results.iter().map(|(y, _)| y[i]).fold(RingElement::ZERO, |a, b| a + b).0)
            .collect();
        println!("gamma {gamma:?}: one-hot {one_hot:?} in {} rounds", out.results[0].1);
    }
    println!("expected rounds for {n} arms: {}", argmax_rounds_two_party(n));
    Ok(())
}
