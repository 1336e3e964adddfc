//! Offline preprocessing: write one dealer file per party, then run an
//! episode that reads only from those files.

use mpc_bandit::bandit::{dealer_plan, run_episode_with, EpisodeConfig, PreprocessingSource};
use mpc_bandit::dealer::{write_party_files, FileStore};
use mpc_bandit::envs::{build_kmeans_env, gaussian_blobs};

fn main() -> mpc_bandit::Result<()> {
    let steps = 25;
    let data = gaussian_blobs(200, 4, 6, 0.6, 1);
    let env = build_kmeans_env(&data, 4, 0.5, 1, Some(steps))?;
    let cfg = EpisodeConfig {
        steps: Some(steps),
        seed: 42,
        ..EpisodeConfig::default()
    };
    let plan = dealer_plan(4, 6, steps, &cfg)?;
    let dir = std::env::temp_dir().join("mpc-bandit-dealer-example");
    std::fs::create_dir_all(&dir)?;
    write_party_files(&dir, &plan, cfg.parties, cfg.seed, cfg.fx)?;
    for p in 0..cfg.parties {
        let path = dir.join(format!("party{p}.dealer"));
        let store = FileStore::open(&path)?;
        println!(
            "{}: {} items, {} bytes",
            path.display(),
            store.remaining(),
            std::fs::metadata(&path)?.len()
        );
    }
    let out = run_episode_with(&env, &cfg, &PreprocessingSource::Files(dir.clone()))?;
    println!("mean reward over {steps} steps: {:.3}", out.mean_reward());

    // one step more than the files cover
    let longer = EpisodeConfig {
        steps: Some(steps + 1),
        ..cfg
    };
    let env = build_kmeans_env(&data, 4, 0.5, 1, Some(steps + 1))?;
    match run_episode_with(&env, &longer, &PreprocessingSource::Files(dir)) {
        Err(e) => println!("{} steps: {e}", steps + 1),
        Ok(_) => println!("unexpected success"),
    }
    Ok(())
}
