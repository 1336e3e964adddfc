//! Boolean circuits on XOR-shared 64-bit words.

use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::ring::RingElement;

use super::Party;

/// Element-wise AND of XOR-shared words with binary triples (1 round).
pub fn and_words(p: &mut Party, x: &[u64], y: &[u64]) -> Result<Vec<u64>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("AND of {} and {} words", x.len(), y.len())));
    }
    let len = x.len();
    let w = p.preprocessing(Request::BinaryTriple { len })?;
    let (a, rest) = w.split_at(len);
    let (b, c) = rest.split_at(len);
    let mut masked = Vec::with_capacity(2 * len);
    masked.extend(x.iter().zip(a).map(|(v, m)| v ^ m));
    masked.extend(y.iter().zip(b).map(|(v, m)| v ^ m));
    let opened = p.open_xor(&masked)?;
    let (e, f) = opened.split_at(len);
    let leader = p.is_leader();
    Ok((0..len)
        .map(|i| {
            let mut z = c[i] ^ (e[i] & b[i]) ^ (f[i] & a[i]);
            if leader {
                z ^= e[i] & f[i];
            }
            z
        })
        .collect())
}

/// Turns each party's arithmetic share into its own binary sharing, without
/// communication: input `q` is `x_q` XOR a dealer sharing of zero.
pub fn binary_inputs(p: &mut Party, x: &[RingElement]) -> Result<Vec<Vec<u64>>> {
    let n = p.parties();
    let len = x.len();
    let zero = p.preprocessing(Request::XorZero { len: len * n })?;
    let me = p.id();
    Ok((0..n)
        .map(|q| {
            (0..len)
                .map(|i| {
                    let own = if q == me { x[i].0 } else { 0 };
                    own ^ zero[q * len + i]
                })
                .collect()
        })
        .collect())
}

/// Carry-save reduction of binary-shared summands to two, one AND round per
/// level.
pub fn csa_reduce(p: &mut Party, mut inputs: Vec<Vec<u64>>) -> Result<(Vec<u64>, Vec<u64>)> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("no summands".into()));
    }
    let len = inputs[0].len();
    while inputs.len() > 2 {
        let groups = inputs.len() / 3;
        let mut lhs = Vec::with_capacity(groups * len);
        let mut rhs = Vec::with_capacity(groups * len);
        let mut sums = Vec::with_capacity(groups);
        for g in 0..groups {
            let (a, b, c) = (&inputs[3 * g], &inputs[3 * g + 1], &inputs[3 * g + 2]);
            for i in 0..len {
                lhs.push(a[i] ^ b[i]);
                rhs.push(a[i] ^ c[i]);
            }
            sums.push((0..len).map(|i| a[i] ^ b[i] ^ c[i]).collect::<Vec<u64>>());
        }
        let prod = and_words(p, &lhs, &rhs)?;
        let mut next = Vec::with_capacity(inputs.len() - groups);
        for (g, s) in sums.into_iter().enumerate() {
            let a = &inputs[3 * g];
            let carry: Vec<u64> = (0..len).map(|i| (a[i] ^ prod[g * len + i]) << 1).collect();
            next.push(s);
            next.push(carry);
        }
        next.extend(inputs.drain(3 * groups..));
        inputs = next;
    }
    let b = if inputs.len() == 2 {
        inputs.pop().unwrap()
    } else {
        vec![0; len]
    };
    Ok((inputs.pop().unwrap(), b))
}

/// Generate/propagate state after the first `levels` prefix levels of a
/// Kogge-Stone adder. `p0` is the bitwise propagate `a XOR b`.
pub struct PrefixState {
    pub g: Vec<u64>,
    pub p: Vec<u64>,
    pub p0: Vec<u64>,
}

/// Level 0 (`g = a & b`) plus `levels` doubling levels, one round each.
pub fn kogge_stone_prefix(p: &mut Party, a: &[u64], b: &[u64], levels: u32) -> Result<PrefixState> {
    let len = a.len();
    let p0: Vec<u64> = a.iter().zip(b).map(|(x, y)| x ^ y).collect();
    let mut g = and_words(p, a, b)?;
    let mut prop = p0.clone();
    for level in 0..levels {
        let s = 1u32 << level;
        let mut lhs = Vec::with_capacity(2 * len);
        let mut rhs = Vec::with_capacity(2 * len);
        lhs.extend_from_slice(&prop);
        rhs.extend(g.iter().map(|x| x << s));
        lhs.extend_from_slice(&prop);
        rhs.extend(prop.iter().map(|x| x << s));
        let prod = and_words(p, &lhs, &rhs)?;
        for (gi, x) in g.iter_mut().zip(&prod[..len]) {
            *gi ^= x;
        }
        prop.copy_from_slice(&prod[len..]);
    }
    Ok(PrefixState { g, p: prop, p0 })
}

/// Binary-shared `a + b mod 2^64` (7 rounds).
pub fn binary_add(p: &mut Party, a: &[u64], b: &[u64]) -> Result<Vec<u64>> {
    let st = kogge_stone_prefix(p, a, b, 6)?;
    Ok(st.p0.iter().zip(&st.g).map(|(x, g)| x ^ (g << 1)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::run_compute;
    use crate::ring::FixedPointConfig;
    use crate::sharing::xor_share_words;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn and_gate_and_adder() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let a: Vec<u64> = (0..64).map(|_| rng.next_u64()).collect();
        let b: Vec<u64> = (0..64).map(|_| rng.next_u64()).collect();
        let sa = xor_share_words(&a, 2, &mut rng);
        let sb = xor_share_words(&b, 2, &mut rng);
        let out = run_compute(2, 1, FixedPointConfig::default(), |p| {
            let me = p.id();
            let and = and_words(p, &sa[me], &sb[me])?;
            let before = p.rounds();
            let sum = binary_add(p, &sa[me], &sb[me])?;
            Ok((and, sum, p.rounds() - before))
        })
        .unwrap();
        let (a0, s0, r) = &out.results[0];
        let (a1, s1, _) = &out.results[1];
        assert_eq!(*r, 7);
        for i in 0..64 {
            assert_eq!(a0[i] ^ a1[i], a[i] & b[i]);
            assert_eq!(s0[i] ^ s1[i], a[i].wrapping_add(b[i]));
        }
    }

    #[test]
    fn csa_preserves_sum() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let vals: Vec<Vec<u64>> = (0..5).map(|_| (0..8).map(|_| rng.next_u64()).collect()).collect();
        let shares: Vec<Vec<Vec<u64>>> = vals.iter().map(|v| xor_share_words(v, 3, &mut rng)).collect();
        let out = run_compute(3, 2, FixedPointConfig::default(), |p| {
            let me = p.id();
            let mine: Vec<Vec<u64>> = shares.iter().map(|s| s[me].clone()).collect();
            let (a, b) = csa_reduce(p, mine)?;
            binary_add(p, &a, &b)
        })
        .unwrap();
        for i in 0..8 {
            let got = out.results.iter().fold(0, |acc, s| acc ^ s[i]);
            let want = vals.iter().fold(0u64, |acc, v| acc.wrapping_add(v[i]));
            assert_eq!(got, want);
        }
    }
}
