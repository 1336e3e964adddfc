//! Encoding reals into the ring and sharing them additively.

use mpc_bandit::ring::{FixedPointConfig, RingElement};
use mpc_bandit::sharing::{reconstruct, share_arithmetic};
use mpc_bandit::tensor::{RingTensor, Shape};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> mpc_bandit::Result<()> {
    let fx = FixedPointConfig::new(20)?;
    for x in [1.0, -2.5, 0.1, 1e-6] {
        let e = fx.encode(x)?;
        println!("{x:>10} -> {:#018x} -> {}", e.0, fx.decode(e));
    }
    // ring arithmetic wraps modulo 2^64
    let big = RingElement(u64::MAX);
    println!("(2^64 - 1) + 2 = {}", (big + RingElement(2)).0);

    let xs = [3.25, -1.0, 0.5];
    let t = RingTensor::encode(Shape::vector(3), &xs, fx)?;
    let shares = share_arithmetic(&t, 3, &mut ChaCha20Rng::seed_from_u64(1))?;
    for (p, s) in shares.iter().enumerate() {
        let w: Vec<String> = s.data().iter().map(|e| format!("{:#018x}", e.0)).collect();
        println!("party {p}: {}", w.join(" "));
    }
    println!("reconstructed: {:?}", reconstruct(&shares)?.decode(fx));
    Ok(())
}
