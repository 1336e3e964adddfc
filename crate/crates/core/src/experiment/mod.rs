//! Experiment runner: single runs, sweeps and the round/slowdown benchmark,
//! all written as CSV plus a manifest that can be fed back as a config.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::hint::black_box;
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};

pub use config::{EnvKind, ExperimentConfig, Mode, SweepKind, SCHEMA_VERSION};

use crate::bandit::{
    dealer_plan, mean_reward, run_episode, run_node, EpisodeConfig, NodeOutput, PlaintextLearner,
    StepRecord,
};
use crate::dealer::{store::party_file_name, write_party_files, FileStore, Preprocessing};
use crate::envs::{build_kmeans_env, load_mnist_pca, Env, Environment, MnistData, MnistEnv, MnistOptions};
use crate::error::{Error, Result};
use crate::privacy::{attack_curve, privacy_loss, AttackConfig};
use crate::protocols::{argmax_one_hot, run_compute, sec_add, sec_mul, sec_reciprocal};
use crate::ring::RingElement;
use crate::sharing::share_arithmetic;
use crate::tensor::{RingTensor, Shape};
use crate::transport::{connect_tcp, RoundLedger, Topology};

/// Process exit code for an error: 2 for bad configuration, 3 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidPrecision(_) => 2,
        _ => 3,
    }
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<MnistData> {
    load_mnist_pca(
        &cfg.data_dir,
        &MnistOptions {
            components: cfg.components,
            cache: cfg.pca_cache.clone(),
        },
    )
}

/// The environment of one run. Both kinds draw contexts from the MNIST
/// training split; the synthetic one replaces labels by k-means rewards.
pub fn build_env(cfg: &ExperimentConfig, data: &MnistData, seed: u64) -> Result<Env> {
    if cfg.steps > data.train.len() {
        return Err(Error::Config(format!(
            "steps {} exceed the {} training contexts",
            cfg.steps,
            data.train.len()
        )));
    }
    Ok(match cfg.env {
        EnvKind::Mnist => Env::Mnist(MnistEnv::new(&data.train, seed, Some(cfg.steps))),
        EnvKind::Synthetic => Env::Synthetic(build_kmeans_env(&data.train, cfg.arms, cfg.sigma, seed, Some(cfg.steps))?),
    })
}

pub fn episode_config(cfg: &ExperimentConfig, seed: u64) -> Result<EpisodeConfig> {
    Ok(EpisodeConfig {
        parties: cfg.parties,
        epsilon: cfg.epsilon,
        fx: cfg.fixed_point()?,
        reciprocal: cfg.reciprocal(),
        steps: Some(cfg.steps),
        seed,
        transport: cfg.transport,
        ..EpisodeConfig::default()
    })
}

/// Per-step outcome of one run.
#[derive(Debug)]
pub struct RunResult {
    pub records: Vec<StepRecord>,
    /// Cumulative rounds after each step (zero for plaintext runs).
    pub step_rounds: Vec<u64>,
    pub step_seconds: Vec<f64>,
    pub ledger: RoundLedger,
}

impl RunResult {
    pub fn mean_reward(&self) -> f64 {
        mean_reward(&self.records)
    }

    /// `step,avg_reward,rounds`: deterministic for a given config.
    pub fn reward_csv(&self) -> String {
        let mut s = String::from("step,avg_reward,rounds\n");
        let mut total = 0.0;
        for (i, r) in self.records.iter().enumerate() {
            total += r.reward;
            let rounds = self.step_rounds.get(i).copied().unwrap_or(0);
            writeln!(s, "{},{:.6},{}", i + 1, total / (i + 1) as f64, rounds).unwrap();
        }
        s
    }

    pub fn timing_csv(&self) -> String {
        let mut s = String::from("step,seconds\n");
        for (i, t) in self.step_seconds.iter().enumerate() {
            writeln!(s, "{},{:.6}", i + 1, t).unwrap();
        }
        s
    }
}

pub fn run_once(cfg: &ExperimentConfig, env: &Env, seed: u64) -> Result<RunResult> {
    match cfg.mode {
        Mode::Secure => {
            let out = run_episode(env, &episode_config(cfg, seed)?)?;
            Ok(RunResult {
                records: out.records,
                step_rounds: out.step_rounds,
                step_seconds: out.step_seconds,
                ledger: out.ledger,
            })
        }
        Mode::Plaintext => {
            let mut learner = PlaintextLearner::new(env.arms(), env.dim(), cfg.epsilon, seed, cfg.fixed_point()?)?;
            let start = Instant::now();
            let mut records = Vec::with_capacity(cfg.steps);
            let mut step_seconds = Vec::with_capacity(cfg.steps);
            for t in 0..cfg.steps.min(env.len()) {
                records.push(learner.step(env, t)?);
                step_seconds.push(start.elapsed().as_secs_f64());
            }
            Ok(RunResult {
                step_rounds: vec![0; records.len()],
                records,
                step_seconds,
                ledger: RoundLedger::new(),
            })
        }
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// The config followed by commented result lines; parses back to the config.
fn manifest(cfg: &ExperimentConfig, outputs: &[PathBuf], notes: &[(String, String)]) -> String {
    let mut s = String::from("# experiment manifest\n");
    s.push_str(&cfg.to_text());
    for p in outputs {
        let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        writeln!(s, "# output: {name}").unwrap();
    }
    for (k, v) in notes {
        writeln!(s, "# {k}: {v}").unwrap();
    }
    s
}

#[derive(Debug)]
pub struct ExperimentSummary {
    pub mean_reward: f64,
    pub total_rounds: u64,
    pub seconds: f64,
    pub files: Vec<PathBuf>,
}

/// One run with `cfg.seed`: `rewards.csv`, `ledger.csv`, `timing.csv` and
/// `manifest.txt` in `cfg.out`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    let env = build_env(cfg, &data, cfg.seed)?;
    let run = run_once(cfg, &env, cfg.seed)?;
    fs::create_dir_all(&cfg.out)?;
    let mut files = vec![
        write(&cfg.out, "rewards.csv", &run.reward_csv())?,
        write(&cfg.out, "ledger.csv", &run.ledger.to_csv())?,
        write(&cfg.out, "timing.csv", &run.timing_csv())?,
    ];
    let seconds = run.step_seconds.last().copied().unwrap_or(0.0);
    let notes = vec![
        ("mean_reward".to_string(), format!("{:.6}", run.mean_reward())),
        ("total_rounds".to_string(), run.ledger.total_rounds().to_string()),
        ("seconds".to_string(), format!("{seconds:.3}")),
    ];
    let m = manifest(cfg, &files, &notes);
    files.push(write(&cfg.out, "manifest.txt", &m)?);
    Ok(ExperimentSummary {
        mean_reward: run.mean_reward(),
        total_rounds: run.ledger.total_rounds(),
        seconds,
        files,
    })
}

/// Aggregate of one sweep cell over its repeats.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub config: ExperimentConfig,
    pub eta: f64,
    pub rewards: Vec<f64>,
    pub rounds_per_step: f64,
    pub seconds_per_step: f64,
    pub failures: Vec<String>,
}

impl SweepRow {
    pub fn mean(&self) -> f64 {
        self.rewards.iter().sum::<f64>() / self.rewards.len() as f64
    }

    pub fn std(&self) -> f64 {
        let n = self.rewards.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.rewards.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }
}

pub const SWEEP_HEADER: &str = "sweep,value,env,mode,epsilon,eta,steps,arms,parties,precision_bits,nr_iters,repeats,completed,mean_reward,std_reward,rounds_per_step,seconds_per_step,status";

fn sweep_csv(kind: SweepKind, rows: &[SweepRow]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in rows {
        let c = &r.config;
        let (mean, std) = if r.rewards.is_empty() {
            (String::new(), String::new())
        } else {
            (format!("{:.6}", r.mean()), format!("{:.6}", r.std()))
        };
        let status = if r.failures.is_empty() {
            "ok".to_string()
        } else {
            format!("failed: {}", r.failures.join("; ").replace([',', '\n'], " "))
        };
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{:.2},{:.6},{}",
            kind.name(),
            r.value,
            c.env.name(),
            c.mode.name(),
            c.epsilon,
            r.eta,
            c.steps,
            c.arms,
            c.parties,
            c.precision_bits,
            c.nr_iters,
            c.repeats,
            r.rewards.len(),
            mean,
            std,
            r.rounds_per_step,
            r.seconds_per_step,
            status
        )
        .unwrap();
    }
    s
}

/// Runs `f` over `items` on up to `available_parallelism` threads,
/// preserving order.
fn parallel_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync) -> Vec<U> {
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(items.len()).max(1);
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<U>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let v = f(&items[i]);
                out.lock().unwrap()[i] = Some(v);
            });
        }
    });
    out.into_inner().unwrap().into_iter().map(|v| v.expect("every cell ran")).collect()
}

fn sweep_cell(cell: &ExperimentConfig, value: f64, data: &MnistData) -> SweepRow {
    let mut rewards = Vec::new();
    let mut failures = Vec::new();
    let (mut rounds, mut seconds, mut steps) = (0.0, 0.0, 0usize);
    let eta = privacy_loss(cell.epsilon, cell.arms).unwrap_or(f64::NAN);
    if let Err(e) = cell.validate() {
        failures.push(e.to_string());
    } else {
        for k in 0..cell.repeats {
            let seed = cell.seed.wrapping_add(k as u64);
            match build_env(cell, data, seed).and_then(|env| run_once(cell, &env, seed)) {
                Ok(run) => {
                    rewards.push(run.mean_reward());
                    rounds += run.step_rounds.last().copied().unwrap_or(0) as f64;
                    seconds += run.step_seconds.last().copied().unwrap_or(0.0);
                    steps += run.records.len();
                }
                Err(e) => failures.push(format!("seed {seed}: {e}")),
            }
        }
    }
    let per = |x: f64| if steps == 0 { 0.0 } else { x / steps as f64 };
    SweepRow {
        value,
        config: cell.clone(),
        eta,
        rewards,
        rounds_per_step: per(rounds),
        seconds_per_step: per(seconds),
        failures,
    }
}

#[derive(Debug)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

/// One row per grid value with mean and std over `repeats` seeds. Failed
/// runs are reported in the row's status and the sweep carries on. A
/// membership sweep writes attack advantages per checkpoint instead.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let kind = cfg
        .sweep
        .ok_or_else(|| Error::Config("no sweep kind given".into()))?;
    let grid = cfg.sweep_grid();
    if grid.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let data = load_data(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    if kind == SweepKind::Membership {
        return run_membership(cfg, &grid, &data);
    }
    let cells: Vec<(f64, ExperimentConfig)> = grid.iter().map(|&v| (v, cfg.with_value(kind, v))).collect();
    let rows = parallel_map(&cells, |(v, c)| sweep_cell(c, *v, &data));
    let mut files = vec![write(&cfg.out, "sweep.csv", &sweep_csv(kind, &rows))?];
    let failed = rows.iter().filter(|r| !r.failures.is_empty()).count();
    let m = manifest(cfg, &files, &[("failed_cells".into(), failed.to_string())]);
    files.push(write(&cfg.out, "manifest.txt", &m)?);
    Ok(SweepOutput { rows, files })
}

fn run_membership(cfg: &ExperimentConfig, grid: &[f64], data: &MnistData) -> Result<SweepOutput> {
    let mut checkpoints: Vec<usize> = cfg.checkpoints.iter().copied().filter(|&c| c > 0 && c <= cfg.steps).collect();
    if checkpoints.is_empty() {
        checkpoints.push(cfg.steps);
    }
    let mut csv = String::from("step,epsilon,advantage,ci95,median,runs,probes\n");
    for &eps in grid {
        let points = attack_curve(
            &data.train,
            &data.test,
            &AttackConfig {
                epsilon: eps,
                steps: cfg.steps,
                checkpoints: checkpoints.clone(),
                probes: cfg.probes,
                runs: cfg.repeats,
                seed: cfg.seed,
            },
        )?;
        for p in points {
            writeln!(
                csv,
                "{},{},{:.6},{:.6},{:.6},{},{}",
                p.step,
                eps,
                p.advantage,
                p.ci,
                p.median(),
                cfg.repeats,
                cfg.probes
            )
            .unwrap();
        }
    }
    let mut files = vec![write(&cfg.out, "membership.csv", &csv)?];
    let m = manifest(cfg, &files, &[]);
    files.push(write(&cfg.out, "manifest.txt", &m)?);
    Ok(SweepOutput {
        rows: Vec::new(),
        files,
    })
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub op: &'static str,
    pub rounds: u64,
    pub mpc_seconds: f64,
    pub plain_seconds: f64,
}

impl BenchRow {
    pub fn slowdown(&self) -> f64 {
        self.mpc_seconds / self.plain_seconds.max(1e-12)
    }
}

/// Least-squares fit `rounds = c0 + c_parties * |P| + c_log * log2 |A|`.
#[derive(Clone, Debug)]
pub struct ArgmaxFit {
    /// `(parties, arms, rounds)`.
    pub points: Vec<(usize, usize, u64)>,
    pub intercept: f64,
    pub per_party: f64,
    pub per_log_arm: f64,
    pub r_squared: f64,
}

#[derive(Debug)]
pub struct BenchReport {
    pub ops: Vec<BenchRow>,
    pub argmax: ArgmaxFit,
    pub files: Vec<PathBuf>,
}

/// Rounds used by one argmax over `arms` values with `parties` parties.
pub fn argmax_rounds(parties: usize, arms: usize, seed: u64) -> Result<u64> {
    let cfg = crate::ring::FixedPointConfig::default();
    let xs: Vec<f64> = (0..arms).map(|i| ((i * 7919) % arms) as f64 / arms as f64).collect();
    let t = RingTensor::encode(Shape::vector(arms), &xs, cfg)?;
    let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(seed);
    let shares = share_arithmetic(&t, parties, &mut rng)?;
    let out = run_compute(parties, seed, cfg, |p| {
        let gamma: Vec<RingElement> = (1..=arms as u64).map(|g| p.constant(RingElement(g))).collect();
        let before = p.rounds();
        argmax_one_hot(p, shares[p.id()].data(), &gamma)?;
        Ok(p.rounds() - before)
    })?;
    Ok(out.results[0])
}

pub fn fit_argmax(points: Vec<(usize, usize, u64)>) -> ArgmaxFit {
    let n = points.len();
    let x = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => points[i].0 as f64,
        _ => (points[i].1 as f64).log2(),
    });
    let y = DVector::from_iterator(n, points.iter().map(|p| p.2 as f64));
    let coef = x
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .unwrap_or_else(|_| DVector::zeros(3));
    let fitted = &x * &coef;
    let mean = y.mean();
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(fitted.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    ArgmaxFit {
        points,
        intercept: coef[0],
        per_party: coef[1],
        per_log_arm: coef[2],
        r_squared: if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot },
    }
}

fn time_plain(reps: usize, mut f: impl FnMut()) -> f64 {
    let start = Instant::now();
    for _ in 0..reps {
        f();
    }
    start.elapsed().as_secs_f64() / reps as f64
}

/// Per-operation rounds and wall-clock slowdown versus plaintext on vectors
/// of `cfg.arms` values, plus the argmax round fit over
/// `|A| in {4, 16, 64}` and `|P| in {2, 3}`.
pub fn run_bench(cfg: &ExperimentConfig, reps: usize) -> Result<BenchReport> {
    cfg.validate()?;
    let reps = reps.max(1);
    let fx = cfg.fixed_point()?;
    let n = cfg.arms;
    let xs: Vec<f64> = (0..n).map(|i| 1.0 + (i % 9) as f64).collect();
    let ys: Vec<f64> = (0..n).map(|i| 0.5 + (i % 5) as f64 / 4.0).collect();
    let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(cfg.seed);
    let xsh = share_arithmetic(&RingTensor::encode(Shape::vector(n), &xs, fx)?, cfg.parties, &mut rng)?;
    let ysh = share_arithmetic(&RingTensor::encode(Shape::vector(n), &ys, fx)?, cfg.parties, &mut rng)?;
    let recip = cfg.reciprocal();
    let ops = ["addition", "multiplication", "reciprocal", "argmax"];
    let mut rows = Vec::new();
    for (k, &op) in ops.iter().enumerate() {
        let out = run_compute(cfg.parties, cfg.seed.wrapping_add(k as u64), fx, |p| {
            let (x, y) = (&xsh[p.id()], &ysh[p.id()]);
            let gamma: Vec<RingElement> = (1..=n as u64).map(|g| p.constant(RingElement(g))).collect();
            let before = p.rounds();
            let start = Instant::now();
            for _ in 0..reps {
                match op {
                    "addition" => drop(black_box(sec_add(x, y)?)),
                    "multiplication" => drop(black_box(sec_mul(p, x, y)?)),
                    "reciprocal" => drop(black_box(sec_reciprocal(p, x, &recip)?)),
                    _ => drop(black_box(argmax_one_hot(p, x.data(), &gamma)?)),
                }
            }
            Ok(((p.rounds() - before) / reps as u64, start.elapsed().as_secs_f64() / reps as f64))
        })?;
        let (rounds, mpc_seconds) = out.results[0];
        let plain_reps = reps * 1000;
        let plain_seconds = match op {
            "addition" => time_plain(plain_reps, || {
                black_box(xs.iter().zip(&ys).map(|(a, b)| a + b).collect::<Vec<_>>());
            }),
            "multiplication" => time_plain(plain_reps, || {
                black_box(xs.iter().zip(&ys).map(|(a, b)| a * b).collect::<Vec<_>>());
            }),
            "reciprocal" => time_plain(plain_reps, || {
                black_box(black_box(&xs).iter().map(|a| 1.0 / a).collect::<Vec<_>>());
            }),
            _ => {
                let gamma: Vec<u64> = (1..=n as u64).collect();
                time_plain(plain_reps, || {
                    black_box(crate::bandit::argmax_tiebreak(black_box(&xs), &gamma));
                })
            }
        };
        rows.push(BenchRow {
            op,
            rounds,
            mpc_seconds,
            plain_seconds,
        });
    }
    let mut points = Vec::new();
    for parties in [2, 3] {
        for arms in [4, 16, 64] {
            points.push((parties, arms, argmax_rounds(parties, arms, cfg.seed)?));
        }
    }
    let fit = fit_argmax(points);
    fs::create_dir_all(&cfg.out)?;
    let mut csv = String::from("op,size,parties,rounds,mpc_seconds,plain_seconds,slowdown\n");
    for r in &rows {
        writeln!(
            csv,
            "{},{},{},{},{:.9},{:.9},{:.1}",
            r.op,
            n,
            cfg.parties,
            r.rounds,
            r.mpc_seconds,
            r.plain_seconds,
            r.slowdown()
        )
        .unwrap();
    }
    let mut fit_csv = String::from("parties,arms,rounds\n");
    for (p, a, r) in &fit.points {
        writeln!(fit_csv, "{p},{a},{r}").unwrap();
    }
    let mut files = vec![
        write(&cfg.out, "bench.csv", &csv)?,
        write(&cfg.out, "argmax_fit.csv", &fit_csv)?,
    ];
    let notes = vec![
        ("reps".to_string(), reps.to_string()),
        (
            "argmax_fit".to_string(),
            format!(
                "rounds = {:.3} + {:.3}*parties + {:.3}*log2(arms), r2 = {:.4}",
                fit.intercept, fit.per_party, fit.per_log_arm, fit.r_squared
            ),
        ),
    ];
    let m = manifest(cfg, &files, &notes);
    files.push(write(&cfg.out, "manifest.txt", &m)?);
    Ok(BenchReport {
        ops: rows,
        argmax: fit,
        files,
    })
}

/// Writes one dealer file per compute party covering `cfg.steps` steps.
pub fn generate_dealer_files(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let ep = episode_config(cfg, cfg.seed)?;
    let plan = dealer_plan(cfg.arms, cfg.components, cfg.steps, &ep)?;
    fs::create_dir_all(dir)?;
    write_party_files(dir, &plan, cfg.parties, cfg.seed, ep.fx)?;
    Ok((0..cfg.parties).map(|p| dir.join(party_file_name(p))).collect())
}

/// Runs node `index` of a TCP deployment in this process. `peers` lists the
/// address of every node (compute parties, puller, receiver, environment).
/// Compute parties read their dealer file from `preprocessing`.
pub fn run_node_process(
    cfg: &ExperimentConfig,
    index: usize,
    peers: &[SocketAddr],
    preprocessing: Option<&Path>,
) -> Result<NodeOutput> {
    cfg.validate()?;
    let topo = Topology::new(cfg.parties)?;
    if peers.len() != topo.nodes() {
        return Err(Error::Config(format!(
            "{} peers given; {} parties need {} nodes",
            peers.len(),
            cfg.parties,
            topo.nodes()
        )));
    }
    if index >= topo.nodes() {
        return Err(Error::Config(format!("node index {index} out of range")));
    }
    let pre: Option<Box<dyn Preprocessing>> = if index < cfg.parties {
        let dir = preprocessing.ok_or_else(|| Error::Config("compute nodes need a preprocessing dir".into()))?;
        Some(Box::new(FileStore::open(&dir.join(party_file_name(index)))?))
    } else {
        None
    };
    let data = load_data(cfg)?;
    let env = build_env(cfg, &data, cfg.seed)?;
    let ep_cfg = episode_config(cfg, cfg.seed)?;
    let listener = TcpListener::bind(peers[index])?;
    let ep = connect_tcp(index, topo, peers, listener, cfg.seed, ep_cfg.timeout)?;
    let out = run_node(ep, &env, &ep_cfg, pre)?;
    fs::create_dir_all(&cfg.out)?;
    match &out {
        NodeOutput::Environment(records) => {
            let run = RunResult {
                records: records.clone(),
                step_rounds: Vec::new(),
                step_seconds: Vec::new(),
                ledger: RoundLedger::new(),
            };
            write(&cfg.out, "rewards.csv", &run.reward_csv())?;
        }
        NodeOutput::Compute(c) => {
            write(&cfg.out, &format!("ledger_party{index}.csv"), &c.ledger.to_csv())?;
        }
        _ => {}
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Exhausted("x".into())), 3);
    }

    #[test]
    fn argmax_fit_is_exact_on_a_plane() {
        let pts = vec![(2, 4, 20), (2, 16, 24), (2, 64, 28), (3, 4, 21), (3, 16, 25), (3, 64, 29)];
        let f = fit_argmax(pts);
        assert!((f.per_log_arm - 2.0).abs() < 1e-9);
        assert!((f.per_party - 1.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_std_and_csv() {
        let row = SweepRow {
            value: 0.1,
            config: ExperimentConfig::default(),
            eta: privacy_loss(0.1, 10).unwrap(),
            rewards: vec![0.5, 0.7],
            rounds_per_step: 66.0,
            seconds_per_step: 0.001,
            failures: vec!["seed 1: boom, bang".into()],
        };
        assert!((row.mean() - 0.6).abs() < 1e-12);
        assert!((row.std() - 0.1414213).abs() < 1e-6);
        let csv = sweep_csv(SweepKind::Epsilon, &[row]);
        let line = csv.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), SWEEP_HEADER.split(',').count());
        assert!(line.ends_with("failed: seed 1: boom  bang"));
    }
}
