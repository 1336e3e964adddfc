use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use mpc_bandit::experiment::{
    run_bench, run_experiment, run_sweep, ExperimentConfig, Mode, SweepKind, SWEEP_HEADER,
};

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist")
}

fn smoke(out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        steps: 50,
        arms: 3,
        data_dir: data_dir(),
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn smoke_run_is_fast_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = smoke(dir.path());
    let t = Instant::now();
    let s = run_experiment(&cfg).unwrap();
    assert!(t.elapsed().as_secs() < 60);
    assert_eq!(s.total_rounds, 50 * 62);
    let first = std::fs::read(dir.path().join("rewards.csv")).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 51);

    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    for key in ExperimentConfig::KEYS {
        assert!(manifest.lines().any(|l| l.starts_with(&format!("{key} = "))), "{key}");
    }
    let again = ExperimentConfig::from_text(&manifest).unwrap();
    assert_eq!(again, cfg);
    run_experiment(&again).unwrap();
    assert_eq!(std::fs::read(dir.path().join("rewards.csv")).unwrap(), first);
}

#[test]
fn epsilon_sweep_rows_and_eta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        sweep: Some(SweepKind::Epsilon),
        grid: vec![0.01, 0.05, 0.1, 0.2],
        repeats: 2,
        mode: Mode::Plaintext,
        steps: 200,
        ..smoke(dir.path())
    };
    let out = run_sweep(&cfg).unwrap();
    assert_eq!(out.rows.len(), 4);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
    for (line, eps) in lines.zip([0.01, 0.05, 0.1, 0.2]) {
        let cols: Vec<&str> = line.split(',').collect();
        let eta: f64 = cols[5].parse().unwrap();
        assert!((eta - (3.0f64 / eps).ln()).abs() < 1e-12);
        assert_eq!(cols.last().unwrap(), &"ok");
    }
}

#[test]
fn failed_cells_are_flagged_and_the_sweep_continues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        sweep: Some(SweepKind::Arms),
        grid: vec![3.0, 9000.0],
        repeats: 1,
        steps: 20,
        ..smoke(dir.path())
    };
    let out = run_sweep(&cfg).unwrap();
    assert!(out.rows[0].failures.is_empty());
    assert_eq!(out.rows[0].rewards.len(), 1);
    assert!(!out.rows[1].failures.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(csv.lines().nth(2).unwrap().contains(",failed: "));
}

#[test]
fn bench_rounds_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_bench(&smoke(dir.path()), 20).unwrap();
    let rounds: Vec<u64> = r.ops.iter().map(|o| o.rounds).collect();
    // arms = 3
    assert_eq!(rounds, vec![0, 2, 30, 19]);
    let slow: Vec<f64> = r.ops.iter().map(|o| o.slowdown()).collect();
    assert!(slow.windows(2).all(|w| w[0] < w[1]), "{slow:?}");
    assert!(r.argmax.r_squared > 0.95);
    assert!(dir.path().join("bench.csv").exists());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mpc-bandit"))
}

#[test]
fn exit_codes_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let bad = bin().args(["--epsilon", "1.5"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let bad = bin().args(["--precision-bits", "40"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let missing = bin()
        .args(["--steps", "5", "--data-dir"])
        .arg(dir.path().join("nowhere"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(3));

    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "steps = 10\narms = 3\nenv = synthetic\n").unwrap();
    let ok = bin()
        .arg("--config")
        .arg(&cfg_path)
        .args(["--seed", "4", "--transport", "tcp", "--parties", "3", "--epsilon", "0.2"])
        .args(["--precision-bits", "18", "--nr-iters", "5", "--env", "synthetic"])
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    let m = ExperimentConfig::load(&dir.path().join("manifest.txt")).unwrap();
    assert_eq!((m.seed, m.parties, m.precision_bits, m.nr_iters, m.steps), (4, 3, 18, 5, 10));
}

#[test]
fn nodes_in_separate_processes() {
    let dir = tempfile::tempdir().unwrap();
    let dealer = dir.path().join("dealer");
    let common = |c: &mut Command| {
        c.args(["--steps", "12", "--arms", "3", "--seed", "6"])
            .arg("--data-dir")
            .arg(data_dir())
            .arg("--out")
            .arg(dir.path());
    };
    let mut g = bin();
    common(&mut g);
    assert!(g.arg("--gen-dealer").arg(&dealer).stdout(Stdio::null()).status().unwrap().success());

    let ports: Vec<u16> = (0..5)
        .map(|_| std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port())
        .collect();
    let peers = ports.iter().map(|p| format!("127.0.0.1:{p}")).collect::<Vec<_>>().join(",");
    let children: Vec<_> = (0..5)
        .map(|i| {
            let mut c = bin();
            common(&mut c);
            c.args(["--node", &i.to_string(), "--peers", &peers])
                .arg("--preprocessing")
                .arg(&dealer)
                .stdout(Stdio::null())
                .spawn()
                .unwrap()
        })
        .collect();
    for mut c in children {
        assert!(c.wait().unwrap().success());
    }
    let distributed = std::fs::read_to_string(dir.path().join("rewards.csv")).unwrap();

    let local = tempfile::tempdir().unwrap();
    let mut c = bin();
    c.args(["--steps", "12", "--arms", "3", "--seed", "6"])
        .arg("--data-dir")
        .arg(data_dir())
        .arg("--out")
        .arg(local.path());
    assert!(c.stdout(Stdio::null()).status().unwrap().success());
    let single = std::fs::read_to_string(local.path().join("rewards.csv")).unwrap();
    let rewards = |s: &str| s.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(rewards(&distributed), rewards(&single));
}
