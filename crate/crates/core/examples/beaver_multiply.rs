//! Secure multiplication with dealer triples, and its round cost.

use mpc_bandit::protocols::{run_compute, sec_add, sec_matmul, sec_mul};
use mpc_bandit::ring::FixedPointConfig;
use mpc_bandit::sharing::{reconstruct, share_arithmetic};
use mpc_bandit::tensor::{RingTensor, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> mpc_bandit::Result<()> {
    let fx = FixedPointConfig::default();
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let x = share_arithmetic(&RingTensor::encode(Shape::vector(3), &[1.5, -2.0, 0.25], fx)?, 2, &mut rng)?;
    let y = share_arithmetic(&RingTensor::encode(Shape::vector(3), &[4.0, 3.0, -8.0], fx)?, 2, &mut rng)?;
    let a = share_arithmetic(&RingTensor::encode(Shape::matrix(2, 2), &[1.0, 2.0, 3.0, 4.0], fx)?, 2, &mut rng)?;

    let out = run_compute(2, 7, fx, |p| {
        let me = p.id();
        let r0 = p.rounds();
        let sum = sec_add(&x[me], &y[me])?;
        let r1 = p.rounds();
        let prod = sec_mul(p, &x[me], &y[me])?;
        let r2 = p.rounds();
        let sq = sec_matmul(p, &a[me], &a[me])?;
        Ok((sum, prod, sq, r1 - r0, r2 - r1, p.rounds() - r2))
    })?;
    let r = &out.results;
    let sums: Vec<_> = r.iter().map(|t| t.0.clone()).collect();
    let prods: Vec<_> = r.iter().map(|t| t.1.clone()).collect();
    let squares: Vec<_> = r.iter().map(|t| t.2.clone()).collect();
    println!("x + y   = {:?}", reconstruct(&sums)?.decode(fx));
    println!("x * y   = {:?}", reconstruct(&prods)?.decode(fx));
    println!("A * A   = {:?}", reconstruct(&squares)?.decode(fx));
    println!("rounds: add {}, mul {}, matmul {}", r[0].3, r[0].4, r[0].5);
    Ok(())
}
