//! Running whole episodes: one thread (or process) per node.

use std::net::{SocketAddr, TcpListener};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::dealer::{FileStore, Preprocessing, Request, SharedDealer};
use crate::envs::{party_dims, Environment, TableEnv};
use crate::error::{Error, Result};
use crate::protocols::{first_root_error, panic_message, Party, ReciprocalConfig};
use crate::ring::FixedPointConfig;
use crate::transport::{
    bind_listeners, connect_tcp, local_mesh, Endpoint, Role, RoundLedger, Topology,
    TranscriptEntry, DEFAULT_TIMEOUT,
};

use super::secure::{environment_program, own_features, puller_program, receiver_program, secure_step};
use super::{check_epsilon, mean_reward, resolve_steps, reward_curve, PolicyState, SecureState, StepRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransportKind {
    Local,
    Tcp,
}

impl TransportKind {
    pub fn name(&self) -> &'static str {
        match self {
            TransportKind::Local => "local",
            TransportKind::Tcp => "tcp",
        }
    }
}

#[derive(Clone, Debug)]
pub struct EpisodeConfig {
    pub parties: usize,
    pub epsilon: f64,
    pub fx: FixedPointConfig,
    pub reciprocal: ReciprocalConfig,
    /// Number of steps; `None` sweeps the whole environment.
    pub steps: Option<usize>,
    /// Dealer seed; also keys the exploration draws.
    pub seed: u64,
    pub transport: TransportKind,
    /// Debug only: keep every party's state shares every `k` steps so the
    /// harness can reconstruct them for drift diagnosis.
    pub snapshot_every: Option<usize>,
    pub capture_transcripts: bool,
    pub timeout: Duration,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig {
            parties: 2,
            epsilon: 0.1,
            fx: FixedPointConfig::default(),
            reciprocal: ReciprocalConfig::default(),
            steps: None,
            seed: 0,
            transport: TransportKind::Local,
            snapshot_every: None,
            capture_transcripts: false,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

/// Where compute parties get their correlated randomness.
#[derive(Clone)]
pub enum PreprocessingSource {
    OnDemand(Arc<SharedDealer>),
    /// Directory holding `party{p}.dealer` files.
    Files(PathBuf),
}

impl PreprocessingSource {
    fn open(&self, party: usize) -> Result<Box<dyn Preprocessing>> {
        Ok(match self {
            PreprocessingSource::OnDemand(d) => Box::new(d.handle(party)),
            PreprocessingSource::Files(dir) => {
                Box::new(FileStore::open(&dir.join(crate::dealer::store::party_file_name(party)))?)
            }
        })
    }
}

/// One party's state shares after `step` steps.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub step: usize,
    pub state: SecureState,
}

#[derive(Debug)]
pub struct ComputeOutput {
    pub state: SecureState,
    pub snapshots: Vec<Snapshot>,
    pub ledger: RoundLedger,
    /// Cumulative rounds after each step.
    pub step_rounds: Vec<u64>,
    /// Cumulative wall-clock seconds after each step.
    pub step_seconds: Vec<f64>,
    pub transcript: Vec<TranscriptEntry>,
}

#[derive(Debug)]
pub enum NodeOutput {
    Compute(Box<ComputeOutput>),
    Puller(Vec<usize>),
    Receiver,
    Environment(Vec<StepRecord>),
}

/// Runs the program of whichever node `ep` belongs to. `pre` is required for
/// compute parties.
pub fn run_node<E: Environment + ?Sized>(
    mut ep: Endpoint,
    env: &E,
    cfg: &EpisodeConfig,
    pre: Option<Box<dyn Preprocessing>>,
) -> Result<NodeOutput> {
    let steps = resolve_steps(env, cfg.steps)?;
    ep.set_timeout(cfg.timeout);
    let me = ep.id();
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2000 + me.index as u64);
    match me.role {
        Role::Compute => {
            let pre = pre.ok_or_else(|| Error::Config("compute party without preprocessing".into()))?;
            let transcript = cfg.capture_transcripts.then(|| ep.capture());
            let mut p = Party::new(ep, pre, cfg.fx, cfg.seed)?;
            let dims = party_dims(env.dim(), cfg.parties);
            let mut st = SecureState::initial(&p, env.arms(), env.dim());
            let mut snapshots = Vec::new();
            let mut step_rounds = Vec::with_capacity(steps);
            let mut step_seconds = Vec::with_capacity(steps);
            let start = Instant::now();
            for t in 0..steps {
                let mine = own_features(env, t, &dims, me.index)?;
                secure_step(&mut p, &mut st, &mine, &dims, cfg.epsilon, &cfg.reciprocal)?;
                step_rounds.push(p.rounds());
                step_seconds.push(start.elapsed().as_secs_f64());
                if cfg.snapshot_every.is_some_and(|k| k > 0 && (t + 1) % k == 0) {
                    snapshots.push(Snapshot {
                        step: t + 1,
                        state: st.clone(),
                    });
                }
            }
            let ledger = p.ledger().clone();
            drop(p);
            Ok(NodeOutput::Compute(Box::new(ComputeOutput {
                state: st,
                snapshots,
                ledger,
                step_rounds,
                step_seconds,
                transcript: transcript.map(|t| t.lock().unwrap().clone()).unwrap_or_default(),
            })))
        }
        Role::Puller => Ok(NodeOutput::Puller(puller_program(
            &mut ep,
            steps,
            env.arms(),
            cfg.fx,
            &mut rng,
        )?)),
        Role::Receiver => {
            receiver_program(&mut ep, steps, cfg.fx, &mut rng)?;
            Ok(NodeOutput::Receiver)
        }
        Role::Environment => Ok(NodeOutput::Environment(environment_program(&mut ep, env, steps)?)),
    }
}

#[derive(Debug)]
pub struct EpisodeOutput {
    pub records: Vec<StepRecord>,
    /// Compute party 0's ledger.
    pub ledger: RoundLedger,
    pub step_rounds: Vec<u64>,
    pub step_seconds: Vec<f64>,
    /// Reconstructed debug snapshots `(step, state)`.
    pub snapshots: Vec<(usize, PolicyState)>,
    /// Reconstructed final state (debug view; no party sees this).
    pub final_state: PolicyState,
    /// Per compute party, when captured.
    pub transcripts: Vec<Vec<TranscriptEntry>>,
    pub arms_at_puller: Vec<usize>,
}

impl EpisodeOutput {
    pub fn curve(&self) -> Vec<f64> {
        reward_curve(&self.records)
    }

    pub fn mean_reward(&self) -> f64 {
        mean_reward(&self.records)
    }

    pub fn arms(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.arm).collect()
    }
}

/// Runs a secure episode with an on-demand dealer seeded by `cfg.seed`.
pub fn run_episode<E: Environment + Sync + ?Sized>(env: &E, cfg: &EpisodeConfig) -> Result<EpisodeOutput> {
    let dealer = SharedDealer::new(cfg.seed, cfg.parties, cfg.fx);
    run_episode_with(env, cfg, &PreprocessingSource::OnDemand(dealer))
}

pub fn run_episode_with<E: Environment + Sync + ?Sized>(
    env: &E,
    cfg: &EpisodeConfig,
    source: &PreprocessingSource,
) -> Result<EpisodeOutput> {
    check_epsilon(cfg.epsilon)?;
    resolve_steps(env, cfg.steps)?;
    if env.arms() == 0 || env.dim() == 0 {
        return Err(Error::InvalidArgument("environment has no arms or features".into()));
    }
    let topo = Topology::new(cfg.parties)?;
    let n = topo.nodes();
    let mut pres: Vec<Option<Box<dyn Preprocessing>>> = (0..n)
        .map(|i| if i < cfg.parties { source.open(i).map(Some) } else { Ok(None) })
        .collect::<Result<_>>()?;
    let outcomes: Vec<Result<NodeOutput>> = match cfg.transport {
        TransportKind::Local => {
            let eps = local_mesh(topo, cfg.seed);
            thread::scope(|s| {
                let handles: Vec<_> = eps
                    .into_iter()
                    .zip(pres.iter_mut())
                    .map(|(ep, pre)| {
                        let pre = pre.take();
                        s.spawn(move || run_node(ep, env, cfg, pre))
                    })
                    .collect();
                join_all(handles)
            })
        }
        TransportKind::Tcp => {
            let any: SocketAddr = "127.0.0.1:0".parse().unwrap();
            let listeners = bind_listeners(&vec![any; n])?;
            let addrs = listeners
                .iter()
                .map(TcpListener::local_addr)
                .collect::<std::io::Result<Vec<_>>>()?;
            thread::scope(|s| {
                let handles: Vec<_> = listeners
                    .into_iter()
                    .zip(pres.iter_mut())
                    .enumerate()
                    .map(|(i, (l, pre))| {
                        let pre = pre.take();
                        let addrs = &addrs;
                        s.spawn(move || {
                            let ep = connect_tcp(i, topo, addrs, l, cfg.seed, cfg.timeout)?;
                            run_node(ep, env, cfg, pre)
                        })
                    })
                    .collect();
                join_all(handles)
            })
        }
    };
    let mut errors = Vec::new();
    let mut computes = Vec::new();
    let mut records = Vec::new();
    let mut arms_at_puller = Vec::new();
    for o in outcomes {
        match o {
            Ok(NodeOutput::Compute(c)) => computes.push(*c),
            Ok(NodeOutput::Puller(a)) => arms_at_puller = a,
            Ok(NodeOutput::Environment(r)) => records = r,
            Ok(NodeOutput::Receiver) => {}
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        return Err(first_root_error(errors));
    }
    let states: Vec<&SecureState> = computes.iter().map(|c| &c.state).collect();
    let final_state = reconstruct_state(&states, cfg.fx, cfg.epsilon);
    let snapshots = (0..computes[0].snapshots.len())
        .map(|k| {
            let parts: Vec<&SecureState> = computes.iter().map(|c| &c.snapshots[k].state).collect();
            (computes[0].snapshots[k].step, reconstruct_state(&parts, cfg.fx, cfg.epsilon))
        })
        .collect();
    let transcripts = computes.iter_mut().map(|c| std::mem::take(&mut c.transcript)).collect();
    let c0 = computes.swap_remove(0);
    Ok(EpisodeOutput {
        records,
        ledger: c0.ledger,
        step_rounds: c0.step_rounds,
        step_seconds: c0.step_seconds,
        snapshots,
        final_state,
        transcripts,
        arms_at_puller,
    })
}

fn join_all<T>(handles: Vec<thread::ScopedJoinHandle<'_, Result<T>>>) -> Vec<Result<T>> {
    handles
        .into_iter()
        .map(|h| h.join().unwrap_or_else(|p| Err(Error::Panicked(panic_message(p)))))
        .collect()
}

/// Decodes the sum of all parties' state shares.
pub fn reconstruct_state(shares: &[&SecureState], fx: FixedPointConfig, epsilon: f64) -> PolicyState {
    let mut w = shares[0].w_inv.clone();
    let mut b = shares[0].b.clone();
    for s in &shares[1..] {
        w.add_assign(&s.w_inv).expect("equal shapes");
        b.add_assign(&s.b).expect("equal shapes");
    }
    let (arms, dim) = (shares[0].arms(), shares[0].dim());
    let w = w.decode(fx);
    let b = b.decode(fx);
    PolicyState {
        w_inv: (0..arms)
            .map(|a| DMatrix::from_row_slice(dim, dim, &w[a * dim * dim..(a + 1) * dim * dim]))
            .collect(),
        b: (0..arms)
            .map(|a| DVector::from_column_slice(&b[a * dim..(a + 1) * dim]))
            .collect(),
        epsilon,
    }
}

/// Preprocessing requests of a `steps`-step episode, recorded from a one-step
/// run (the demand does not depend on the data).
pub fn dealer_plan(arms: usize, dim: usize, steps: usize, cfg: &EpisodeConfig) -> Result<Vec<Request>> {
    let env = TableEnv::new(vec![vec![0.0; dim]], vec![vec![0.0; arms]])?;
    let dealer = SharedDealer::recording(cfg.seed, cfg.parties, cfg.fx);
    let one = EpisodeConfig {
        steps: Some(1),
        transport: TransportKind::Local,
        snapshot_every: None,
        capture_transcripts: false,
        ..cfg.clone()
    };
    run_episode_with(&env, &one, &PreprocessingSource::OnDemand(dealer.clone()))?;
    let step = dealer.plan().unwrap_or_default();
    Ok((0..steps).flat_map(|_| step.iter().copied()).collect())
}
