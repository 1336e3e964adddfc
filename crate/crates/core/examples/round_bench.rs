//! Rounds and slowdown of each secure operation, and how argmax rounds grow
//! with arms and parties.

use mpc_bandit::experiment::{run_bench, ExperimentConfig};

fn main() -> mpc_bandit::Result<()> {
    let cfg = ExperimentConfig {
        out: std::env::temp_dir().join("mpc-bandit-bench"),
        ..ExperimentConfig::default()
    };
    let report = run_bench(&cfg, 50)?;
    for r in &report.ops {
        println!("{:<15} {:3} rounds  {:>9.0}x slower than plaintext", r.op, r.rounds, r.slowdown());
    }
    for (p, a, r) in &report.argmax.points {
        println!("argmax |P| = {p}, |A| = {a:2}: {r} rounds");
    }
    let f = &report.argmax;
    println!(
        "fit: {:.2} + {:.2} |P| + {:.2} log2|A|, R^2 = {:.4}",
        f.intercept, f.per_party, f.per_log_arm, f.r_squared
    );
    Ok(())
}
