//! Epsilon-greedy linear contextual bandit, secure and plaintext.
//!
//! The secure learner keeps every arm's inverse covariance `W_a^{-1}` and bias
//! `b_a` secret-shared among the compute parties and updates all arms each
//! step, so nobody learns which arm was pulled. The plaintext learner runs the
//! same recursion in floating point and, fed the same exploration draws, picks
//! the same arms.

mod episode;
mod secure;

use nalgebra::{DMatrix, DVector};

use crate::dealer::ExplorationRng;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::ring::FixedPointConfig;

pub use episode::{
    dealer_plan, reconstruct_state, run_episode, run_episode_with, run_node, ComputeOutput,
    EpisodeConfig, EpisodeOutput, NodeOutput, PreprocessingSource, Snapshot, TransportKind,
};
pub use secure::{
    dp_blend, environment_program, puller_program, receive_feedback, receiver_program,
    score_arms, secure_step, select_and_open_action, update, ArmScores, SecureState,
};

/// Plaintext learner state: per-arm `W_a^{-1}` and `b_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState {
    pub w_inv: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
    pub epsilon: f64,
}

impl PolicyState {
    pub fn new(arms: usize, dim: usize, epsilon: f64) -> Self {
        PolicyState {
            w_inv: vec![DMatrix::identity(dim, dim); arms],
            b: vec![DVector::zeros(dim); arms],
            epsilon,
        }
    }

    pub fn arms(&self) -> usize {
        self.b.len()
    }

    pub fn dim(&self) -> usize {
        self.b.first().map_or(0, |b| b.len())
    }

    /// `s_a = (W_a^{-1} b_a)^T x`.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(x);
        self.w_inv
            .iter()
            .zip(&self.b)
            .map(|(w, b)| (w * b).dot(&x))
            .collect()
    }

    /// Sherman-Morrison update of the pulled arm.
    pub fn update(&mut self, arm: usize, x: &[f64], reward: f64) {
        let x = DVector::from_column_slice(x);
        let w = &mut self.w_inv[arm];
        let u = &*w * &x;
        let q = x.dot(&u);
        *w -= (&u * u.transpose()) / (1.0 + q);
        self.b[arm] += reward * x;
    }

    /// Every `W_a^{-1}` symmetric (to `tol`) and positive definite.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        self.w_inv.iter().all(|w| {
            (w - w.transpose()).amax() <= tol && w.clone().cholesky().is_some()
        })
    }
}

/// What happened at one step. `explored` and `scores` are only known to the
/// plaintext learner.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub explored: Option<bool>,
    pub scores: Option<Vec<f64>>,
}

/// Cumulative average reward after each step.
pub fn reward_curve(records: &[StepRecord]) -> Vec<f64> {
    let mut total = 0.0;
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            total += r.reward;
            total / (i + 1) as f64
        })
        .collect()
}

pub fn mean_reward(records: &[StepRecord]) -> f64 {
    if records.is_empty() {
        0.0
    } else {
        records.iter().map(|r| r.reward).sum::<f64>() / records.len() as f64
    }
}

/// Index of the maximum of `scores`; among equal maxima the one with the
/// largest `gamma` wins.
pub fn argmax_tiebreak(scores: &[f64], gamma: &[u64]) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && gamma[i] > gamma[best]) {
            best = i;
        }
    }
    best
}

/// Exploration draws of one step, in dealer order.
#[derive(Clone, Debug, PartialEq)]
pub struct ExplorationDraw {
    pub explore: bool,
    /// Uniform scores as integers over `2^L`.
    pub uniforms: Vec<u64>,
    pub gamma: Vec<u64>,
}

impl ExplorationDraw {
    pub fn next(rng: &mut ExplorationRng, epsilon: f64, arms: usize, fx: FixedPointConfig) -> Self {
        let explore = rng.bernoulli(epsilon);
        let uniforms = (0..arms).map(|_| rng.uniform_fixed(fx)).collect();
        let gamma = rng.permutation(arms);
        ExplorationDraw {
            explore,
            uniforms,
            gamma,
        }
    }
}

/// Floating-point epsilon-greedy learner with the secure learner's update
/// rule and exploration stream.
#[derive(Clone, Debug)]
pub struct PlaintextLearner {
    pub state: PolicyState,
    fx: FixedPointConfig,
    rng: ExplorationRng,
}

impl PlaintextLearner {
    /// `seed` must be the dealer seed of the secure run it mirrors.
    pub fn new(arms: usize, dim: usize, epsilon: f64, seed: u64, fx: FixedPointConfig) -> Result<Self> {
        check_epsilon(epsilon)?;
        if arms == 0 || dim == 0 {
            return Err(Error::InvalidArgument(format!("{arms} arms, dimension {dim}")));
        }
        Ok(PlaintextLearner {
            state: PolicyState::new(arms, dim, epsilon),
            fx,
            rng: ExplorationRng::new(seed),
        })
    }

    /// Chooses an arm for `x`: scores, then exploration, then tie-break.
    pub fn act(&mut self, x: &[f64]) -> (usize, bool, Vec<f64>) {
        let scores = self.state.scores(x);
        let d = ExplorationDraw::next(&mut self.rng, self.state.epsilon, self.state.arms(), self.fx);
        let blended: Vec<f64> = if d.explore {
            d.uniforms.iter().map(|&k| k as f64 / self.fx.scale_f64()).collect()
        } else {
            scores.clone()
        };
        (argmax_tiebreak(&blended, &d.gamma), d.explore, scores)
    }

    pub fn step<E: Environment + ?Sized>(&mut self, env: &E, t: usize) -> Result<StepRecord> {
        let x = env.context(t);
        let (arm, explored, scores) = self.act(x);
        let reward = checked_reward(env.reward(t, arm))?;
        self.state.update(arm, x, reward);
        Ok(StepRecord {
            t,
            arm,
            reward,
            explored: Some(explored),
            scores: Some(scores),
        })
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [0, 1]")))
    }
}

pub(crate) fn checked_reward(r: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&r) {
        Ok(r)
    } else {
        Err(Error::InvalidArgument(format!("reward {r} outside [0, 1]")))
    }
}

/// Result of a plaintext run.
#[derive(Clone, Debug)]
pub struct PlaintextRun {
    pub records: Vec<StepRecord>,
    pub state: PolicyState,
    /// States after the steps listed in `checkpoint_steps`.
    pub checkpoints: Vec<(usize, PolicyState)>,
}

impl PlaintextRun {
    pub fn curve(&self) -> Vec<f64> {
        reward_curve(&self.records)
    }
}

/// Runs the plaintext learner for `steps` (default: the whole environment).
pub fn plaintext_reference<E: Environment + ?Sized>(
    env: &E,
    steps: Option<usize>,
    epsilon: f64,
    seed: u64,
    fx: FixedPointConfig,
) -> Result<PlaintextRun> {
    plaintext_with_checkpoints(env, steps, epsilon, seed, fx, &[])
}

/// As [`plaintext_reference`], saving the state after each step count in
/// `checkpoint_steps`.
pub fn plaintext_with_checkpoints<E: Environment + ?Sized>(
    env: &E,
    steps: Option<usize>,
    epsilon: f64,
    seed: u64,
    fx: FixedPointConfig,
    checkpoint_steps: &[usize],
) -> Result<PlaintextRun> {
    let steps = resolve_steps(env, steps)?;
    let mut learner = PlaintextLearner::new(env.arms(), env.dim(), epsilon, seed, fx)?;
    let mut records = Vec::with_capacity(steps);
    let mut checkpoints = Vec::new();
    if checkpoint_steps.contains(&0) {
        checkpoints.push((0, learner.state.clone()));
    }
    for t in 0..steps {
        records.push(learner.step(env, t)?);
        if checkpoint_steps.contains(&(t + 1)) {
            checkpoints.push((t + 1, learner.state.clone()));
        }
    }
    Ok(PlaintextRun {
        records,
        state: learner.state,
        checkpoints,
    })
}

pub(crate) fn resolve_steps<E: Environment + ?Sized>(env: &E, steps: Option<usize>) -> Result<usize> {
    let steps = steps.unwrap_or(env.len());
    if steps > env.len() {
        return Err(Error::InvalidArgument(format!(
            "{steps} steps requested, environment has {}",
            env.len()
        )));
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::TableEnv;

    #[test]
    fn fresh_scores_are_zero() {
        let s = PolicyState::new(3, 4, 0.1);
        assert_eq!(s.scores(&[1.0, 0.0, 0.0, 0.0]), vec![0.0; 3]);
    }

    #[test]
    fn unit_bias_scores_one() {
        let mut s = PolicyState::new(2, 3, 0.1);
        s.b[1] = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        assert_eq!(s.scores(&[1.0, 0.0, 0.0])[1], 1.0);
    }

    #[test]
    fn sherman_morrison_matches_inverse() {
        let mut s = PolicyState::new(1, 3, 0.0);
        let xs = [[1.0, 0.0, 0.0], [0.6, 0.8, 0.0], [0.0, 0.6, 0.8], [0.48, 0.6, 0.64]];
        let mut w = DMatrix::<f64>::identity(3, 3);
        for x in &xs {
            s.update(0, x, 1.0);
            let v = DVector::from_column_slice(x);
            w += &v * v.transpose();
        }
        let inv = w.try_inverse().unwrap();
        assert!((&s.w_inv[0] - inv).amax() < 1e-12);
        assert!(s.is_positive_definite(1e-12));
        // first update from the identity halves the first diagonal entry
        let mut one = PolicyState::new(1, 3, 0.0);
        one.update(0, &[1.0, 0.0, 0.0], 0.0);
        assert_eq!(one.w_inv[0][(0, 0)], 0.5);
        assert_eq!(one.w_inv[0][(1, 1)], 1.0);
    }

    #[test]
    fn tiebreak_prefers_larger_gamma() {
        assert_eq!(argmax_tiebreak(&[0.0, 1.0, 1.0], &[3, 1, 2]), 2);
        assert_eq!(argmax_tiebreak(&[0.0, 0.0, 0.0], &[3, 1, 2]), 0);
        assert_eq!(argmax_tiebreak(&[0.5], &[1]), 0);
    }

    #[test]
    fn greedy_learner_finds_the_rewarding_arm() {
        let ctx = vec![vec![1.0, 0.0]; 200];
        let rewards = vec![vec![0.0, 1.0, 0.0]; 200];
        let env = TableEnv::new(ctx, rewards).unwrap();
        let run = plaintext_reference(&env, None, 0.0, 1, FixedPointConfig::default()).unwrap();
        let late = mean_reward(&run.records[20..]);
        assert_eq!(late, 1.0);
    }

    #[test]
    fn equal_seeds_are_identical() {
        let env = TableEnv::new(vec![vec![0.6, 0.8]; 50], vec![vec![0.0, 1.0]; 50]).unwrap();
        let a = plaintext_reference(&env, None, 0.3, 4, FixedPointConfig::default()).unwrap();
        let b = plaintext_reference(&env, None, 0.3, 4, FixedPointConfig::default()).unwrap();
        assert_eq!(a.records, b.records);
        assert!(plaintext_reference(&env, Some(51), 0.3, 4, FixedPointConfig::default()).is_err());
        assert!(plaintext_reference(&env, Some(0), 0.3, 4, FixedPointConfig::default())
            .unwrap()
            .records
            .is_empty());
    }
}
