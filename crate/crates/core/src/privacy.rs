//! Differential-privacy accounting of epsilon-greedy action release and an
//! empirical membership-inference attack.

use std::collections::BTreeSet;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::bandit::{argmax_tiebreak, PlaintextLearner, PolicyState};
use crate::envs::{Dataset, MnistEnv};
use crate::error::{Error, Result};
use crate::ring::FixedPointConfig;

/// Per-step privacy loss `eta = log(|A| / epsilon)` of releasing an
/// epsilon-greedy action; infinite when `epsilon = 0`.
pub fn privacy_loss(epsilon: f64, arms: usize) -> Result<f64> {
    if arms < 2 {
        return Err(Error::InvalidArgument(format!("{arms} arms")));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon}")));
    }
    Ok(if epsilon == 0.0 {
        f64::INFINITY
    } else {
        (arms as f64 / epsilon).ln()
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DpAccount {
    pub epsilon: f64,
    pub arms: usize,
    pub eta: f64,
}

impl DpAccount {
    pub fn new(epsilon: f64, arms: usize) -> Result<Self> {
        Ok(DpAccount {
            epsilon,
            arms,
            eta: privacy_loss(epsilon, arms)?,
        })
    }

    /// Probability that the greedy arm is released.
    pub fn greedy_probability(&self) -> f64 {
        1.0 - self.epsilon + self.epsilon / self.arms as f64
    }
}

/// Outcome of [`verify_dp_ratio`].
#[derive(Clone, Debug)]
pub struct DpRatioCheck {
    pub account: DpAccount,
    pub trials: usize,
    /// Largest `log P(a | argmax j) / P(a | argmax k)` over outputs and pairs.
    pub max_log_ratio: f64,
    /// Delta-method standard error of that estimate.
    pub sigma: f64,
    /// Largest `|log ratio|` over outputs that are the argmax in neither case.
    pub max_cross_log_ratio: f64,
    pub cross_sigma: f64,
    /// Empirical frequency of the greedy arm, pooled over scenarios.
    pub greedy_frequency: f64,
    pub greedy_sigma: f64,
}

impl DpRatioCheck {
    pub fn within_bound(&self, sigmas: f64) -> bool {
        self.max_log_ratio <= self.account.eta + sigmas * self.sigma
    }

    pub fn greedy_within(&self, sigmas: f64) -> bool {
        (self.greedy_frequency - self.account.greedy_probability()).abs() <= sigmas * self.greedy_sigma
    }
}

fn log_ratio_sigma(ca: u64, na: usize, cb: u64, nb: usize) -> f64 {
    let var = |c: u64, n: usize| {
        let p = c as f64 / n as f64;
        (1.0 - p) / (n as f64 * p)
    };
    (var(ca, na) + var(cb, nb)).sqrt()
}

/// Simulates the released action for a fixed score vector whose argmax is
/// arm `j`, for every `j`, `trials` times each: exploration picks the
/// argmax of uniform scores, exactly as the secure learner does. Compares the
/// empirical output distributions of every pair of scenarios.
pub fn verify_dp_ratio(epsilon: f64, arms: usize, trials: usize, seed: u64) -> Result<DpRatioCheck> {
    let account = DpAccount::new(epsilon, arms)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    let fx = FixedPointConfig::default();
    let counts: Vec<Vec<u64>> = thread::scope(|s| {
        let handles: Vec<_> = (0..arms)
            .map(|j| {
                s.spawn(move || {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(j as u64 + 1);
                    let mut scores = vec![0.0; arms];
                    scores[j] = 1.0;
                    let gamma: Vec<u64> = (1..=arms as u64).collect();
                    let mut c = vec![0u64; arms];
                    let mut uniforms = vec![0.0; arms];
                    for _ in 0..trials {
                        let a = if rng.random::<f64>() < epsilon {
                            for u in uniforms.iter_mut() {
                                *u = (rng.random::<u64>() >> (64 - fx.precision_bits())) as f64;
                            }
                            let perm = random_permutation(arms, &mut rng);
                            argmax_tiebreak(&uniforms, &perm)
                        } else {
                            argmax_tiebreak(&scores, &gamma)
                        };
                        c[a] += 1;
                    }
                    c
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut max_log_ratio = f64::NEG_INFINITY;
    let mut sigma = 0.0;
    let mut max_cross = 0.0f64;
    let mut cross_sigma = 0.0;
    for j in 0..arms {
        for k in 0..arms {
            if j == k {
                continue;
            }
            for (a, (&cj, &ck)) in counts[j].iter().zip(&counts[k]).enumerate() {
                if cj == 0 || ck == 0 {
                    // an output seen under one scenario only has unbounded
                    // ratio; possible only when epsilon is 0
                    if cj != ck {
                        max_log_ratio = f64::INFINITY;
                    }
                    continue;
                }
                let lr = (cj as f64 / ck as f64).ln();
                let sd = log_ratio_sigma(cj, trials, ck, trials);
                if lr > max_log_ratio {
                    max_log_ratio = lr;
                    sigma = sd;
                }
                if a != j && a != k && lr.abs() > max_cross {
                    max_cross = lr.abs();
                    cross_sigma = sd;
                }
            }
        }
    }
    let greedy: u64 = (0..arms).map(|j| counts[j][j]).sum();
    let n = (arms * trials) as f64;
    let p = account.greedy_probability();
    Ok(DpRatioCheck {
        account,
        trials,
        max_log_ratio,
        sigma,
        max_cross_log_ratio: max_cross,
        cross_sigma,
        greedy_frequency: greedy as f64 / n,
        greedy_sigma: (p * (1.0 - p) / n).sqrt(),
    })
}

fn random_permutation(n: usize, rng: &mut impl Rng) -> Vec<u64> {
    use rand::seq::SliceRandom;
    let mut p: Vec<u64> = (1..=n as u64).collect();
    p.shuffle(rng);
    p
}

/// Empirical `p(r | a)` with add-one smoothing over the reward support.
#[derive(Clone, Debug, Default)]
pub struct ConditionalTable {
    counts: Vec<Vec<(f64, u64)>>,
}

impl ConditionalTable {
    pub fn new(arms: usize) -> Self {
        ConditionalTable {
            counts: vec![Vec::new(); arms],
        }
    }

    pub fn add(&mut self, arm: usize, reward: f64) {
        let row = &mut self.counts[arm];
        match row.iter_mut().find(|(r, _)| *r == reward) {
            Some((_, c)) => *c += 1,
            None => row.push((reward, 1)),
        }
    }

    pub fn count(&self, arm: usize, reward: f64) -> u64 {
        self.counts[arm].iter().find(|(r, _)| *r == reward).map_or(0, |(_, c)| *c)
    }

    pub fn total(&self, arm: usize) -> u64 {
        self.counts[arm].iter().map(|(_, c)| c).sum()
    }

    /// Distinct reward values seen in any arm.
    pub fn support(&self) -> Vec<f64> {
        let set: BTreeSet<u64> = self.counts.iter().flatten().map(|(r, _)| r.to_bits()).collect();
        set.into_iter().map(f64::from_bits).collect()
    }

    /// Smoothed `p(r | a)` over a support of `support` values.
    pub fn prob(&self, arm: usize, reward: f64, support: usize) -> f64 {
        (self.count(arm, reward) + 1) as f64 / (self.total(arm) + support as u64) as f64
    }
}

#[derive(Clone, Debug)]
pub struct AttackEstimate {
    pub p_train: ConditionalTable,
    pub p_test: ConditionalTable,
    pub support: usize,
    pub tpr: f64,
    pub fpr: f64,
    pub advantage: f64,
}

/// Releases one epsilon-greedy action of a checkpoint (ties at random).
pub fn policy_action(model: &PolicyState, x: &[f64], rng: &mut impl Rng) -> usize {
    let arms = model.arms();
    if rng.random::<f64>() < model.epsilon {
        return rng.random_range(0..arms);
    }
    let gamma = random_permutation(arms, rng);
    argmax_tiebreak(&model.scores(x), &gamma)
}

/// Threshold attack against one checkpoint: estimate `p_train(r | a)` and
/// `p_test(r | a)` by running the model on `members` and `non_members`, then
/// guess "member" for `probes` fresh evaluations from each set whenever
/// `p_train(r | a) > p_test(r | a)`.
pub fn membership_attack<F>(
    model: &PolicyState,
    members: &Dataset,
    non_members: &Dataset,
    reward: F,
    probes: usize,
    rng: &mut impl Rng,
) -> Result<AttackEstimate>
where
    F: Fn(usize, usize) -> f64,
{
    if members.is_empty() || non_members.is_empty() || probes == 0 {
        return Err(Error::InvalidArgument("attack needs members, non-members and probes".into()));
    }
    let arms = model.arms();
    let mut tables = [ConditionalTable::new(arms), ConditionalTable::new(arms)];
    for (table, set) in tables.iter_mut().zip([members, non_members]) {
        for (x, &label) in set.features.iter().zip(&set.labels) {
            let a = policy_action(model, x, rng);
            table.add(a, reward(label, a));
        }
    }
    let [p_train, p_test] = tables;
    let mut support: BTreeSet<u64> = p_train.support().into_iter().map(f64::to_bits).collect();
    support.extend(p_test.support().into_iter().map(f64::to_bits));
    let support = support.len().max(1);
    let mut rates = [0.0; 2];
    for (rate, set) in rates.iter_mut().zip([members, non_members]) {
        let mut yes = 0;
        for _ in 0..probes {
            let i = rng.random_range(0..set.len());
            let a = policy_action(model, &set.features[i], rng);
            let r = reward(set.labels[i], a);
            if p_train.prob(a, r, support) > p_test.prob(a, r, support) {
                yes += 1;
            }
        }
        *rate = yes as f64 / probes as f64;
    }
    let [tpr, fpr] = rates;
    Ok(AttackEstimate {
        p_train,
        p_test,
        support,
        tpr,
        fpr,
        advantage: tpr - fpr,
    })
}

/// Mean attack advantage over runs at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackPoint {
    pub step: usize,
    pub epsilon: f64,
    pub advantage: f64,
    /// Half-width of the normal 95% interval of the mean.
    pub ci: f64,
    pub per_run: Vec<f64>,
}

impl AttackPoint {
    pub fn median(&self) -> f64 {
        let mut v = self.per_run.clone();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        if n == 0 {
            0.0
        } else if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub steps: usize,
    pub checkpoints: Vec<usize>,
    pub probes: usize,
    pub runs: usize,
    pub seed: u64,
}

/// Trains the (plaintext-equivalent) learner on a fresh sweep of `train` per
/// run and attacks each checkpoint; members are the examples seen so far,
/// non-members come from `test`.
pub fn attack_curve(train: &Dataset, test: &Dataset, cfg: &AttackConfig) -> Result<Vec<AttackPoint>> {
    if cfg.runs == 0 || cfg.checkpoints.iter().any(|&c| c == 0 || c > cfg.steps) {
        return Err(Error::InvalidArgument("checkpoints must lie in 1..=steps".into()));
    }
    let fx = FixedPointConfig::default();
    let per_run: Vec<Result<Vec<f64>>> = thread::scope(|s| {
        let handles: Vec<_> = (0..cfg.runs)
            .map(|run| {
                s.spawn(move || -> Result<Vec<f64>> {
                    let seed = cfg.seed.wrapping_add(run as u64);
                    let env = MnistEnv::new(train, seed, Some(cfg.steps));
                    let mut learner = PlaintextLearner::new(10, env.dataset().dim(), cfg.epsilon, seed, fx)?;
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(3);
                    let mut out = Vec::with_capacity(cfg.checkpoints.len());
                    for t in 0..cfg.steps {
                        learner.step(&env, t)?;
                        if cfg.checkpoints.contains(&(t + 1)) {
                            let seen: Vec<usize> = (0..=t).collect();
                            let members = env.dataset().subset(&seen);
                            let est = membership_attack(
                                &learner.state,
                                &members,
                                test,
                                |label, arm| (label == arm) as u8 as f64,
                                cfg.probes,
                                &mut rng,
                            )?;
                            out.push(est.advantage);
                        }
                    }
                    Ok(out)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let per_run = per_run.into_iter().collect::<Result<Vec<_>>>()?;
    let mut cps = cfg.checkpoints.clone();
    cps.sort_unstable();
    cps.dedup();
    Ok(cps
        .iter()
        .enumerate()
        .map(|(k, &step)| {
            let v: Vec<f64> = per_run.iter().map(|r| r[k]).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let sd = if v.len() > 1 {
                (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            AttackPoint {
                step,
                epsilon: cfg.epsilon,
                advantage: mean,
                ci: 1.96 * sd / n.sqrt(),
                per_run: v,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    #[allow(clippy::approx_constant)]
    fn loss_examples() {
        assert!((privacy_loss(1.0, 10).unwrap() - 2.3026).abs() < 1e-4);
        assert!((privacy_loss(0.1, 10).unwrap() - 4.6052).abs() < 1e-4);
        assert_eq!(privacy_loss(0.0, 10).unwrap(), f64::INFINITY);
        assert!(privacy_loss(0.5, 1).is_err());
        assert!(privacy_loss(1.5, 3).is_err());
    }

    proptest! {
        #[test]
        fn loss_is_monotone(e1 in 0.001f64..1.0, e2 in 0.001f64..1.0, a1 in 2usize..100, a2 in 2usize..100) {
            let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
            prop_assert!(privacy_loss(lo, a1).unwrap() >= privacy_loss(hi, a1).unwrap());
            let (small, big) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
            prop_assert!(privacy_loss(e1, small).unwrap() <= privacy_loss(e1, big).unwrap());
        }
    }

    #[test]
    fn uniform_channel_has_no_ratio() {
        let c = verify_dp_ratio(1.0, 4, 20_000, 1).unwrap();
        assert!(c.max_log_ratio.abs() < 4.0 * c.sigma.max(0.02));
        assert!(c.within_bound(3.0));
    }

    #[test]
    fn greedy_frequency_at_half() {
        let c = verify_dp_ratio(0.5, 4, 20_000, 2).unwrap();
        assert!((c.account.greedy_probability() - 0.625).abs() < 1e-12);
        assert!(c.greedy_within(3.5));
    }

    #[test]
    fn cross_case_ratio_vanishes() {
        // one pair (argmax 0 vs argmax 1) and one output that is neither
        let c = verify_dp_ratio(0.5, 3, 50_000, 4).unwrap();
        assert!(c.within_bound(3.0));
        let p: f64 = 0.5 / 3.0;
        let sd = (2.0 * (1.0 - p) / (50_000.0 * p)).sqrt();
        assert!(c.max_cross_log_ratio <= 4.5 * sd, "{} vs {sd}", c.max_cross_log_ratio);
    }

    #[test]
    fn zero_epsilon_is_unbounded() {
        let c = verify_dp_ratio(0.0, 3, 1_000, 3).unwrap();
        assert_eq!(c.max_log_ratio, f64::INFINITY);
    }

    #[test]
    fn smoothing_and_support() {
        let mut t = ConditionalTable::new(2);
        t.add(0, 1.0);
        t.add(0, 1.0);
        t.add(0, 0.0);
        assert_eq!(t.support(), vec![0.0, 1.0]);
        assert_eq!(t.prob(0, 1.0, 2), 3.0 / 5.0);
        assert_eq!(t.prob(1, 1.0, 2), 0.5);
        assert!((t.prob(0, 0.0, 2) + t.prob(0, 1.0, 2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn indistinguishable_sets_give_no_advantage() {
        let data = crate::envs::gaussian_blobs(400, 4, 5, 0.5, 1);
        let (a, b): (Vec<usize>, Vec<usize>) = (0..400).partition(|i| (i * 37 / 7) % 2 == 0);
        let model = PolicyState::new(4, 5, 0.3);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut adv = Vec::new();
        for _ in 0..20 {
            let est = membership_attack(
                &model,
                &data.subset(&a),
                &data.subset(&b),
                |label, arm| (label == arm) as u8 as f64,
                500,
                &mut rng,
            )
            .unwrap();
            assert!((-1.0..=1.0).contains(&est.advantage));
            adv.push(est.advantage);
        }
        let mean = adv.iter().sum::<f64>() / 20.0;
        assert!(mean.abs() < 0.05, "{mean}");
    }
}
