//! Flat `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bandit::TransportKind;
use crate::error::{Error, Result};
use crate::protocols::ReciprocalConfig;
use crate::ring::FixedPointConfig;

/// Version of every CSV schema and of the manifest layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvKind {
    Mnist,
    Synthetic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Secure,
    Plaintext,
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Epsilon,
    Arms,
    Parties,
    Precision,
    Iterations,
    Membership,
}

impl SweepKind {
    pub const ALL: [SweepKind; 6] = [
        SweepKind::Epsilon,
        SweepKind::Arms,
        SweepKind::Parties,
        SweepKind::Precision,
        SweepKind::Iterations,
        SweepKind::Membership,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Epsilon => "epsilon",
            SweepKind::Arms => "arms",
            SweepKind::Parties => "parties",
            SweepKind::Precision => "precision",
            SweepKind::Iterations => "iters",
            SweepKind::Membership => "membership",
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            SweepKind::Epsilon | SweepKind::Membership => vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
            SweepKind::Arms => vec![2.0, 4.0, 8.0, 16.0, 32.0],
            SweepKind::Parties => vec![2.0, 3.0, 4.0, 5.0],
            SweepKind::Precision => (6..=28).step_by(2).map(f64::from).collect(),
            SweepKind::Iterations => (1..=8).map(f64::from).collect(),
        }
    }
}

macro_rules! named_enum {
    ($t:ty { $($v:path => $s:literal),* $(,)? }) => {
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)*
                    other => Err(Error::Config(format!(
                        "unknown {} '{other}' (expected one of: {})",
                        stringify!($t),
                        [$($s),*].join(", ")
                    ))),
                }
            }
        }
    };
}

named_enum!(EnvKind { EnvKind::Mnist => "mnist", EnvKind::Synthetic => "synthetic" });
named_enum!(Mode { Mode::Secure => "secure", Mode::Plaintext => "plaintext" });
named_enum!(SweepKind {
    SweepKind::Epsilon => "epsilon",
    SweepKind::Arms => "arms",
    SweepKind::Parties => "parties",
    SweepKind::Precision => "precision",
    SweepKind::Iterations => "iters",
    SweepKind::Membership => "membership",
});

impl EnvKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::Mnist => "mnist",
            EnvKind::Synthetic => "synthetic",
        }
    }
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Secure => "secure",
            Mode::Plaintext => "plaintext",
        }
    }
}

fn parse_transport(s: &str) -> Result<TransportKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "local" => Ok(TransportKind::Local),
        "tcp" => Ok(TransportKind::Tcp),
        other => Err(Error::Config(format!("unknown transport '{other}' (expected local or tcp)"))),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    pub data_dir: PathBuf,
    /// Optional PCA cache file.
    pub pca_cache: Option<PathBuf>,
    pub components: usize,
    /// Width of the synthetic reward kernel.
    pub sigma: f64,
    pub steps: usize,
    pub epsilon: f64,
    pub arms: usize,
    pub parties: usize,
    pub precision_bits: u32,
    pub nr_iters: usize,
    pub transport: TransportKind,
    pub mode: Mode,
    pub seed: u64,
    pub repeats: usize,
    pub sweep: Option<SweepKind>,
    /// Sweep values; empty means the sweep's default grid.
    pub grid: Vec<f64>,
    pub probes: usize,
    pub checkpoints: Vec<usize>,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            env: EnvKind::Synthetic,
            data_dir: PathBuf::from("data/mnist"),
            pca_cache: None,
            components: 20,
            sigma: 0.5,
            steps: 2000,
            epsilon: 0.1,
            arms: 10,
            parties: 2,
            precision_bits: 20,
            nr_iters: 7,
            transport: TransportKind::Local,
            mode: Mode::Secure,
            seed: 0,
            repeats: 5,
            sweep: None,
            grid: Vec::new(),
            probes: 1000,
            checkpoints: vec![20, 50, 100, 200, 500, 1000, 2000],
            out: PathBuf::from("results"),
        }
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{}'", v.trim())))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 21] = [
        "env",
        "data_dir",
        "pca_cache",
        "components",
        "sigma",
        "steps",
        "epsilon",
        "arms",
        "parties",
        "precision_bits",
        "nr_iters",
        "transport",
        "mode",
        "seed",
        "repeats",
        "sweep",
        "grid",
        "probes",
        "checkpoints",
        "out",
        "schema",
    ];

    /// Sets one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "env" => self.env = v.parse()?,
            "data_dir" => self.data_dir = PathBuf::from(v),
            "pca_cache" => self.pca_cache = (!v.is_empty()).then(|| PathBuf::from(v)),
            "components" => self.components = parse_num(key, v)?,
            "sigma" => self.sigma = parse_num(key, v)?,
            "steps" => self.steps = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "arms" => self.arms = parse_num(key, v)?,
            "parties" => self.parties = parse_num(key, v)?,
            "precision_bits" => self.precision_bits = parse_num(key, v)?,
            "nr_iters" => self.nr_iters = parse_num(key, v)?,
            "transport" => self.transport = parse_transport(v)?,
            "mode" => self.mode = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "repeats" => self.repeats = parse_num(key, v)?,
            "sweep" => self.sweep = if v.is_empty() || v == "none" { None } else { Some(v.parse()?) },
            "grid" => self.grid = parse_list(key, v)?,
            "probes" => self.probes = parse_num(key, v)?,
            "checkpoints" => self.checkpoints = parse_list(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "schema" => {
                let s: u32 = parse_num(key, v)?;
                if s != SCHEMA_VERSION {
                    return Err(Error::Config(format!("schema {s}, this build reads {SCHEMA_VERSION}")));
                }
            }
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Every field as `key = value` lines, readable by [`Self::from_text`].
    pub fn to_text(&self) -> String {
        let path = |p: &Path| p.display().to_string();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("schema", SCHEMA_VERSION.to_string());
        kv("env", self.env.name().into());
        kv("data_dir", path(&self.data_dir));
        kv("pca_cache", self.pca_cache.as_deref().map(path).unwrap_or_default());
        kv("components", self.components.to_string());
        kv("sigma", self.sigma.to_string());
        kv("steps", self.steps.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("arms", self.arms.to_string());
        kv("parties", self.parties.to_string());
        kv("precision_bits", self.precision_bits.to_string());
        kv("nr_iters", self.nr_iters.to_string());
        kv("transport", self.transport.name().into());
        kv("mode", self.mode.name().into());
        kv("seed", self.seed.to_string());
        kv("repeats", self.repeats.to_string());
        kv("sweep", self.sweep.map_or("none", |k| k.name()).into());
        kv("grid", join(&self.grid));
        kv("probes", self.probes.to_string());
        kv("checkpoints", join(&self.checkpoints));
        kv("out", path(&self.out));
        s
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.epsilon) {
            return bad(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.precision_bits == 0 || self.precision_bits >= 32 {
            return bad(format!("precision_bits {} outside (0, 32)", self.precision_bits));
        }
        if self.parties < 2 {
            return bad(format!("{} parties; need at least 2", self.parties));
        }
        if self.arms < 2 {
            return bad(format!("{} arms; need at least 2", self.arms));
        }
        if self.env == EnvKind::Mnist && self.arms != crate::envs::MNIST_CLASSES {
            return bad(format!("mnist has {} arms, not {}", crate::envs::MNIST_CLASSES, self.arms));
        }
        if self.nr_iters == 0 {
            return bad("nr_iters must be positive".into());
        }
        if self.components == 0 {
            return bad("components must be positive".into());
        }
        if self.sigma <= 0.0 {
            return bad(format!("sigma {} must be positive", self.sigma));
        }
        if self.repeats == 0 {
            return bad("repeats must be positive".into());
        }
        if self.sweep == Some(SweepKind::Membership) && self.probes == 0 {
            return bad("membership sweep needs probes > 0".into());
        }
        if let Some(kind) = self.sweep {
            for &v in &self.grid {
                let ok = match kind {
                    SweepKind::Epsilon | SweepKind::Membership => (0.0..=1.0).contains(&v),
                    SweepKind::Arms => v >= 2.0 && v.fract() == 0.0,
                    SweepKind::Parties => v >= 2.0 && v.fract() == 0.0,
                    SweepKind::Precision => v > 0.0 && v < 32.0 && v.fract() == 0.0,
                    SweepKind::Iterations => v >= 1.0 && v.fract() == 0.0,
                };
                if !ok {
                    return bad(format!("grid value {v} invalid for a {} sweep", kind.name()));
                }
            }
        }
        Ok(())
    }

    pub fn fixed_point(&self) -> Result<FixedPointConfig> {
        FixedPointConfig::new(self.precision_bits)
    }

    pub fn reciprocal(&self) -> ReciprocalConfig {
        ReciprocalConfig::with_iterations(self.nr_iters)
    }

    /// Grid actually swept.
    pub fn sweep_grid(&self) -> Vec<f64> {
        match (self.sweep, self.grid.is_empty()) {
            (Some(k), true) => k.default_grid(),
            _ => self.grid.clone(),
        }
    }

    /// Copy of `self` with the swept parameter set to `value`.
    pub fn with_value(&self, kind: SweepKind, value: f64) -> Self {
        let mut c = self.clone();
        match kind {
            SweepKind::Epsilon | SweepKind::Membership => c.epsilon = value,
            SweepKind::Arms => c.arms = value as usize,
            SweepKind::Parties => c.parties = value as usize,
            SweepKind::Precision => c.precision_bits = value as u32,
            SweepKind::Iterations => c.nr_iters = value as usize,
        }
        c
    }
}
