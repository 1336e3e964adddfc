//! One step of the secure learner, and the programs of the nodes around it.

use rand::RngCore;

use crate::dealer::Request;
use crate::envs::{split_features, Environment};
use crate::error::{Error, Result};
use crate::protocols::{
    argmax_one_hot, beaver_fixed, collect_from_compute, reciprocal, share_to_compute, Job, Party,
    ReciprocalConfig,
};
use crate::ring::{FixedPointConfig, RingElement};
use crate::tensor::{RingTensor, Shape};
use crate::transport::Endpoint;

use super::{checked_reward, StepRecord};

/// This party's shares of every arm's `W_a^{-1}` (shape `(A, D, D)`) and
/// `b_a` (shape `(A, D, 1)`).
#[derive(Clone, Debug, PartialEq)]
pub struct SecureState {
    pub w_inv: RingTensor,
    pub b: RingTensor,
}

impl SecureState {
    /// `W_a^{-1} = I`, `b_a = 0`: public, so held by party 0 alone.
    pub fn initial(p: &Party, arms: usize, dim: usize) -> Self {
        let one = p.constant(p.fx().one());
        SecureState {
            w_inv: RingTensor::identity(arms, dim, one),
            b: RingTensor::zeros(Shape::new(arms, dim, 1)),
        }
    }

    pub fn arms(&self) -> usize {
        self.b.shape().batch
    }

    pub fn dim(&self) -> usize {
        self.b.shape().rows
    }
}

/// Shares produced while scoring, reused by the update.
#[derive(Clone, Debug)]
pub struct ArmScores {
    /// `s_a = (W_a^{-1} b_a)^T x`.
    pub scores: RingTensor,
    /// `u_a = W_a^{-1} x`, shape `(A, D, 1)`.
    pub u: RingTensor,
    /// `q_a = x^T W_a^{-1} x`.
    pub q: RingTensor,
}

fn add_const(p: &Party, t: &RingTensor, c: RingElement) -> RingTensor {
    if p.is_leader() {
        t.map(|v| v + c)
    } else {
        t.clone()
    }
}

fn repeat(t: &RingTensor, times: usize, shape: Shape) -> Result<RingTensor> {
    let mut v = Vec::with_capacity(t.len() * times);
    for _ in 0..times {
        v.extend_from_slice(t.data());
    }
    RingTensor::from_vec(shape, v)
}

/// Scores every arm for the shared context `x` (4 rounds): one batched matrix
/// product gives `W^{-1} b` and `W^{-1} x`, one batched dot product gives
/// the scores and `x^T W^{-1} x`.
pub fn score_arms(p: &mut Party, st: &SecureState, x: &RingTensor) -> Result<ArmScores> {
    let (arms, dim) = (st.arms(), st.dim());
    if x.len() != dim {
        return Err(Error::Shape(format!("context of {} for dimension {dim}", x.len())));
    }
    p.scoped("score", |p| {
        let mut bx = Vec::with_capacity(arms * dim * 2);
        for a in 0..arms {
            for i in 0..dim {
                bx.push(st.b.data()[a * dim + i]);
                bx.push(x.data()[i]);
            }
        }
        let bx = RingTensor::from_vec(Shape::new(arms, dim, 2), bx)?;
        let wu = beaver_fixed(p, &[Job::Matmul(&st.w_inv, &bx)])?.pop().unwrap();
        let mut lhs = Vec::with_capacity(2 * arms * dim);
        for col in 0..2 {
            for a in 0..arms {
                for i in 0..dim {
                    lhs.push(wu.data()[(a * dim + i) * 2 + col]);
                }
            }
        }
        let u = RingTensor::from_vec(Shape::new(arms, dim, 1), lhs[arms * dim..].to_vec())?;
        let lhs = RingTensor::from_vec(Shape::new(2 * arms, 1, dim), lhs)?;
        let rhs = repeat(x, 2 * arms, Shape::new(2 * arms, dim, 1))?;
        let dots = beaver_fixed(p, &[Job::Matmul(&lhs, &rhs)])?.pop().unwrap();
        Ok(ArmScores {
            scores: RingTensor::vector(dots.data()[..arms].to_vec()),
            u,
            q: RingTensor::vector(dots.data()[arms..].to_vec()),
        })
    })
}

/// `s~ = s + y (v - s)` with fresh dealer draws `y ~ Bernoulli(epsilon)` and
/// uniforms `v` (2 rounds).
pub fn dp_blend(p: &mut Party, scores: &RingTensor, epsilon: f64) -> Result<RingTensor> {
    p.scoped("blend", |p| {
        let arms = scores.len();
        let y = p.preprocessing(Request::Bernoulli { epsilon })?[0];
        let v = p.preprocessing(Request::Uniform { len: arms })?;
        let v = RingTensor::from_u64(Shape::vector(arms), v)?;
        let diff = v.sub(scores)?;
        let ys = RingTensor::vector(vec![RingElement(y); arms]);
        let yd = beaver_fixed(p, &[Job::Hadamard(&ys, &diff)])?.pop().unwrap();
        scores.add(&yd)
    })
}

/// Secure argmax with a fresh random tie-break, then reveals the arm index to
/// the puller only. Returns the one-hot shares (integer scale).
pub fn select_and_open_action(p: &mut Party, blended: &RingTensor, puller: usize) -> Result<Vec<RingElement>> {
    let arms = blended.len();
    let gamma: Vec<RingElement> = p
        .preprocessing(Request::Permutation { n: arms })?
        .into_iter()
        .map(RingElement)
        .collect();
    let z = argmax_one_hot(p, blended.data(), &gamma)?;
    let index: RingElement = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| RingElement(i as u64) * zi)
        .sum();
    let target = p.endpoint().topology().node(puller)?;
    p.scoped("open_action", |p| p.open_to(&[index], target))?;
    Ok(z)
}

/// Receives the one-hot indicator from the puller and the reward from the
/// receiver, both encoded at scale `2^L` (1 round).
pub fn receive_feedback(
    p: &mut Party,
    arms: usize,
    puller: usize,
    receiver: usize,
) -> Result<(RingTensor, RingElement)> {
    let got = p.scoped("feedback", |p| p.receive_from(&[puller, receiver]))?;
    if got[0].len() != arms || got[1].len() != 1 {
        return Err(Error::Desync {
            from: puller,
            to: p.id(),
            detail: format!("feedback of {} and {} words", got[0].len(), got[1].len()),
        });
    }
    let mut it = got.into_iter();
    let o = RingTensor::vector(it.next().unwrap());
    let r = it.next().unwrap()[0];
    Ok((o, r))
}

/// Oblivious update of all arms: `W_a^{-1} -= o_a u_a u_a^T / (1 + q_a)` and
/// `b_a += o_a r x`.
pub fn update(
    p: &mut Party,
    st: &mut SecureState,
    x: &RingTensor,
    scored: &ArmScores,
    o: &RingTensor,
    r: RingElement,
    recip: &ReciprocalConfig,
) -> Result<()> {
    let (arms, dim) = (st.arms(), st.dim());
    let denom = add_const(p, &scored.q, p.fx().one());
    let inv = reciprocal(p, &denom, recip)?;
    p.scoped("update", |p| {
        let ut = scored.u.clone().reshape(Shape::new(arms, 1, dim))?;
        let rs = RingTensor::vector(vec![r; dim]);
        let x = x.clone().reshape(Shape::vector(dim))?;
        let mut first = beaver_fixed(
            p,
            &[
                Job::Matmul(&scored.u, &ut),
                Job::Hadamard(o, &inv),
                Job::Hadamard(&rs, &x),
            ],
        )?;
        let rx = first.pop().unwrap();
        let g = first.pop().unwrap();
        let outer = first.pop().unwrap();
        let mut gs = Vec::with_capacity(arms * dim * dim);
        for a in 0..arms {
            gs.extend(std::iter::repeat_n(g.data()[a], dim * dim));
        }
        let gs = RingTensor::from_vec(outer.shape(), gs)?;
        let o3 = o.clone().reshape(Shape::new(arms, 1, 1))?;
        let rx_rep = repeat(&rx, arms, Shape::new(arms, 1, dim))?;
        let mut second = beaver_fixed(p, &[Job::Hadamard(&gs, &outer), Job::Matmul(&o3, &rx_rep)])?;
        let orx = second.pop().unwrap().reshape(st.b.shape())?;
        let m = second.pop().unwrap();
        st.w_inv.sub_assign(&m)?;
        st.b.add_assign(&orx)
    })
}

/// A compute party's whole step for its private features `mine` (this
/// party's slice of the context, `lens[q]` features held by party `q`).
pub fn secure_step(
    p: &mut Party,
    st: &mut SecureState,
    mine: &[f64],
    lens: &[usize],
    epsilon: f64,
    recip: &ReciprocalConfig,
) -> Result<()> {
    let topo = p.endpoint().topology();
    let fx = p.fx();
    let encoded = fx.encode_all(mine)?;
    let pieces = p.scoped("input", |p| p.share_inputs(&encoded, lens))?;
    let x = RingTensor::vector(pieces.concat());
    let scored = score_arms(p, st, &x)?;
    let blended = dp_blend(p, &scored.scores, epsilon)?;
    select_and_open_action(p, &blended, topo.puller().index)?;
    let (o, r) = receive_feedback(p, st.arms(), topo.puller().index, topo.receiver().index)?;
    update(p, st, &x, &scored, &o, r, recip)
}

/// The puller: learns each step's arm, forwards it to the environment and
/// secret-shares the one-hot indicator back.
pub fn puller_program(
    ep: &mut Endpoint,
    steps: usize,
    arms: usize,
    fx: FixedPointConfig,
    rng: &mut impl RngCore,
) -> Result<Vec<usize>> {
    let env = ep.topology().environment().index;
    let mut arms_pulled = Vec::with_capacity(steps);
    for _ in 0..steps {
        let opened = collect_from_compute(ep, "open_action")?;
        let a = opened.first().map(|e| e.signed()).unwrap_or(-1);
        if a < 0 || a as usize >= arms {
            return Err(Error::Desync {
                from: 0,
                to: ep.id().index,
                detail: format!("opened arm {a} of {arms}"),
            });
        }
        let a = a as usize;
        ep.send(env, "action", &(a as u64).to_le_bytes())?;
        let mut o = vec![RingElement::ZERO; arms];
        o[a] = fx.one();
        share_to_compute(ep, "feedback", &o, rng)?;
        arms_pulled.push(a);
    }
    Ok(arms_pulled)
}

/// The reward receiver: gets each reward from the environment and
/// secret-shares it.
pub fn receiver_program(
    ep: &mut Endpoint,
    steps: usize,
    fx: FixedPointConfig,
    rng: &mut impl RngCore,
) -> Result<()> {
    let env = ep.topology().environment().index;
    for _ in 0..steps {
        let bytes = ep.recv(env, "reward")?;
        let r = f64::from_le_bytes(
            bytes
                .as_slice()
                .try_into()
                .map_err(|_| Error::Format("reward frame".into()))?,
        );
        share_to_compute(ep, "feedback", &[fx.encode(checked_reward(r)?)?], rng)?;
    }
    Ok(())
}

/// The outside world: turns actions into rewards. Sees what an external
/// observer of the deployed policy would see.
pub fn environment_program<E: Environment + ?Sized>(
    ep: &mut Endpoint,
    env: &E,
    steps: usize,
) -> Result<Vec<StepRecord>> {
    let topo = ep.topology();
    let mut records = Vec::with_capacity(steps);
    for t in 0..steps {
        let bytes = ep.recv(topo.puller().index, "action")?;
        let arm = u64::from_le_bytes(
            bytes
                .as_slice()
                .try_into()
                .map_err(|_| Error::Format("action frame".into()))?,
        ) as usize;
        if arm >= env.arms() {
            return Err(Error::InvalidArgument(format!("arm {arm} of {}", env.arms())));
        }
        let reward = checked_reward(env.reward(t, arm))?;
        ep.send(topo.receiver().index, "reward", &reward.to_le_bytes())?;
        records.push(StepRecord {
            t,
            arm,
            reward,
            explored: None,
            scores: None,
        });
    }
    Ok(records)
}

/// This compute party's slice of context `t`.
pub(crate) fn own_features<E: Environment + ?Sized>(
    env: &E,
    t: usize,
    dims: &[usize],
    me: usize,
) -> Result<Vec<f64>> {
    Ok(split_features(env.context(t), dims)?.swap_remove(me))
}
