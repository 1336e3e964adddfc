//! Privacy loss of epsilon-greedy action release, checked by simulation.

use mpc_bandit::privacy::{privacy_loss, verify_dp_ratio};

fn main() -> mpc_bandit::Result<()> {
    println!("{:>6} {:>5} {:>8} {:>10} {:>8} {:>9} {:>9}", "eps", "arms", "eta", "max ratio", "sigma", "greedy", "expected");
    for arms in [2, 10] {
        for eps in [0.1, 0.5, 1.0] {
            let c = verify_dp_ratio(eps, arms, 100_000, 1)?;
            println!(
                "{eps:>6} {arms:>5} {:>8.4} {:>10.4} {:>8.4} {:>9.4} {:>9.4}",
                c.account.eta,
                c.max_log_ratio,
                c.sigma,
                c.greedy_frequency,
                c.account.greedy_probability()
            );
        }
    }
    println!("eps = 0 gives eta = {}", privacy_loss(0.0, 10)?);
    Ok(())
}
