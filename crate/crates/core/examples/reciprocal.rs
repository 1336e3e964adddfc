//! Newton-Raphson reciprocal on shares: accuracy against iteration count.

use mpc_bandit::protocols::{run_compute, sec_reciprocal, ReciprocalConfig};
use mpc_bandit::ring::FixedPointConfig;
use mpc_bandit::sharing::{reconstruct, share_arithmetic};
use mpc_bandit::tensor::{RingTensor, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> mpc_bandit::Result<()> {
    let fx = FixedPointConfig::default();
    let xs: Vec<f64> = (0..10).map(|i| 1.0 + i as f64).collect();
    let x = share_arithmetic(
        &RingTensor::encode(Shape::vector(xs.len()), &xs, fx)?,
        2,
        &mut ChaCha20Rng::seed_from_u64(1),
    )?;
    for iters in 1..=7 {
        let cfg = ReciprocalConfig::with_iterations(iters);
        let out = run_compute(2, iters as u64, fx, |p| {
            let before = p.rounds();
            let r = sec_reciprocal(p, &x[p.id()], &cfg)?;
            Ok((r, p.rounds() - before))
        })?;
        let rounds = out.results[0].1;
        let shares: Vec<_> = out.results.into_iter().map(|(r, _)| r).collect();
        let got = reconstruct(&shares)?.decode(fx);
        let worst = got
            .iter()
            .zip(&xs)
            .map(|(g, x)| (g * x - 1.0).abs())
            .fold(0.0, f64::max);
        println!("{iters} iterations: {rounds:2} rounds, max relative error {worst:.2e}");
    }
    Ok(())
}
