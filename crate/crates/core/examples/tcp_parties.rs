//! The same episode over in-process channels and over loopback TCP.

use std::time::Instant;

use mpc_bandit::bandit::{run_episode, EpisodeConfig, TransportKind};
use mpc_bandit::envs::{build_kmeans_env, gaussian_blobs};

fn main() -> mpc_bandit::Result<()> {
    let data = gaussian_blobs(400, 5, 8, 0.6, 2);
    let env = build_kmeans_env(&data, 5, 0.5, 2, Some(100))?;
    let mut curves = Vec::new();
    for transport in [TransportKind::Local, TransportKind::Tcp] {
        for parties in [2, 3] {
            let cfg = EpisodeConfig {
                steps: Some(100),
                seed: 9,
                parties,
                transport,
                ..EpisodeConfig::default()
            };
            let t = Instant::now();
            let out = run_episode(&env, &cfg)?;
            println!(
                "{:5} {parties} parties: reward {:.3}, {} rounds, {} bytes sent by party 0, {:.2?}",
                transport.name(),
                out.mean_reward(),
                out.ledger.total_rounds(),
                out.ledger.total_bytes_sent(),
                t.elapsed()
            );
            curves.push((parties, out.arms()));
        }
    }
    let same = curves[0].1 == curves[2].1 && curves[1].1 == curves[3].1;
    println!("tcp reproduces local: {same}");
    Ok(())
}
