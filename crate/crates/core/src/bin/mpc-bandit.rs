use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mpc_bandit::experiment::{
    exit_code, generate_dealer_files, run_bench, run_experiment, run_node_process, run_sweep,
    ExperimentConfig,
};

/// Privacy-preserving contextual bandit experiments.
///
/// Without a mode flag, runs one experiment. `--sweep` runs a grid, `--bench`
/// the per-operation benchmark, `--gen-dealer` writes dealer files and
/// `--node` runs a single node of a TCP deployment.
#[derive(Parser, Debug)]
#[command(name = "mpc-bandit", version)]
struct Cli {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// local or tcp.
    #[arg(long)]
    transport: Option<String>,
    #[arg(long)]
    parties: Option<usize>,
    #[arg(long)]
    arms: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    precision_bits: Option<u32>,
    #[arg(long)]
    nr_iters: Option<usize>,
    /// mnist or synthetic.
    #[arg(long)]
    env: Option<String>,
    /// epsilon, arms, parties, precision, iters or membership.
    #[arg(long)]
    sweep: Option<String>,
    /// Comma-separated sweep values.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    /// secure or plaintext.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Probe evaluations per set in membership sweeps.
    #[arg(long)]
    probes: Option<usize>,
    /// Run the per-operation benchmark with this many repetitions.
    #[arg(long, value_name = "REPS")]
    bench: Option<usize>,
    /// Write dealer files for the configured run into this directory.
    #[arg(long, value_name = "DIR")]
    gen_dealer: Option<PathBuf>,
    /// Run node INDEX of a TCP deployment (needs --peers).
    #[arg(long, value_name = "INDEX")]
    node: Option<usize>,
    /// Comma-separated addresses of all nodes, in index order.
    #[arg(long, value_delimiter = ',')]
    peers: Vec<SocketAddr>,
    /// Directory holding dealer files for compute nodes.
    #[arg(long)]
    preprocessing: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

fn resolve(cli: &Cli) -> mpc_bandit::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let path = |p: &PathBuf| p.display().to_string();
    let overrides: [(&str, Option<String>); 16] = [
        ("out", cli.out.as_ref().map(path)),
        ("seed", cli.seed.map(|v| v.to_string())),
        ("transport", cli.transport.clone()),
        ("parties", cli.parties.map(|v| v.to_string())),
        ("arms", cli.arms.map(|v| v.to_string())),
        ("epsilon", cli.epsilon.map(|v| v.to_string())),
        ("precision_bits", cli.precision_bits.map(|v| v.to_string())),
        ("nr_iters", cli.nr_iters.map(|v| v.to_string())),
        ("env", cli.env.clone()),
        ("sweep", cli.sweep.clone()),
        ("grid", cli.grid.clone()),
        ("steps", cli.steps.map(|v| v.to_string())),
        ("repeats", cli.repeats.map(|v| v.to_string())),
        ("mode", cli.mode.clone()),
        ("data_dir", cli.data_dir.as_ref().map(path)),
        ("probes", cli.probes.map(|v| v.to_string())),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> mpc_bandit::Result<()> {
    let cfg = resolve(cli)?;
    if cli.dry_run {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    if let Some(dir) = &cli.gen_dealer {
        for f in generate_dealer_files(&cfg, dir)? {
            println!("{}", f.display());
        }
    } else if let Some(index) = cli.node {
        let out = run_node_process(&cfg, index, &cli.peers, cli.preprocessing.as_deref())?;
        println!("node {index} finished: {}", node_kind(&out));
    } else if let Some(reps) = cli.bench {
        let report = run_bench(&cfg, reps)?;
        println!("{:<15}{:>8}{:>14}", "op", "rounds", "slowdown");
        for r in &report.ops {
            println!("{:<15}{:>8}{:>13.0}x", r.op, r.rounds, r.slowdown());
        }
        let f = &report.argmax;
        println!(
            "argmax rounds = {:.2} + {:.2}*|P| + {:.2}*log2|A|  (R^2 {:.4})",
            f.intercept, f.per_party, f.per_log_arm, f.r_squared
        );
    } else if cfg.sweep.is_some() {
        let out = run_sweep(&cfg)?;
        for r in &out.rows {
            let status = if r.failures.is_empty() { "" } else { "  (failures)" };
            println!("{:>8}  mean {:.4}  std {:.4}  eta {:.3}{status}", r.value, r.mean(), r.std(), r.eta);
        }
        for f in &out.files {
            println!("wrote {}", f.display());
        }
    } else {
        let s = run_experiment(&cfg)?;
        println!(
            "mean reward {:.4}  rounds {}  {:.2}s",
            s.mean_reward, s.total_rounds, s.seconds
        );
        for f in &s.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(())
}

fn node_kind(out: &mpc_bandit::bandit::NodeOutput) -> &'static str {
    use mpc_bandit::bandit::NodeOutput::*;
    match out {
        Compute(_) => "compute",
        Puller(_) => "puller",
        Receiver => "receiver",
        Environment(_) => "environment",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
