//! Wrap counting and division by public powers of two.
//!
//! For shares `x_p` of `x` (signed lift `x_s`), the wrap count is the integer
//! `theta_x` with `sum_p x_p = x_s + theta_x Q`. Masking with a dealer value
//! `r` of known wrap count `theta_r` and opening `z = x + r` gives
//! `theta_x = theta_z + sum_p beta_p - theta_r - eta`, where `beta_p` is the
//! carry of `x_p + r_p` and `eta = floor((x_s + r) / Q)`. The `eta` term is
//! dropped, which is wrong with probability about `|x_s| / Q`.

use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::sharing::ArithmeticShare;
use crate::tensor::RingTensor;

use super::Party;

/// Shares of `theta_x` for every element (1 round).
pub fn count_wraps(p: &mut Party, x: &[RingElement]) -> Result<Vec<RingElement>> {
    p.scoped("count_wraps", |p| {
        let len = x.len();
        let w = p.preprocessing(Request::WrapHelper { len })?;
        let (r, theta_r) = w.split_at(len);
        let mut z = Vec::with_capacity(len);
        let mut beta = Vec::with_capacity(len);
        for (xi, ri) in x.iter().zip(r) {
            let (s, carry) = xi.0.overflowing_add(*ri);
            z.push(s);
            beta.push(carry as u64);
        }
        let all = p.broadcast_round(&z)?;
        let leader = p.is_leader();
        Ok((0..len)
            .map(|i| {
                let total: u128 = all.iter().map(|zs| zs[i] as u128).sum();
                let theta_z = (total >> 64) as u64;
                let mut t = RingElement(beta[i]) - RingElement(theta_r[i]);
                if leader {
                    t += RingElement(theta_z);
                }
                t
            })
            .collect())
    })
}

/// Divides every element by `2^shifts[i]` (1 round for the whole batch).
///
/// Party 0 rounds its share quotient down and the others round up, which
/// makes the two-party result exact whenever the value is a multiple of the
/// divisor.
pub fn truncate_many(p: &mut Party, x: &[RingElement], shifts: &[u32]) -> Result<Vec<RingElement>> {
    if x.len() != shifts.len() {
        return Err(Error::Shape(format!(
            "{} values, {} shift amounts",
            x.len(),
            shifts.len()
        )));
    }
    if let Some(&k) = shifts.iter().find(|&&k| k == 0 || k >= 64) {
        return Err(Error::InvalidArgument(format!("shift by {k} bits")));
    }
    p.scoped("truncate", |p| {
        let theta = count_wraps(p, x)?;
        let leader = p.is_leader();
        Ok(x
            .iter()
            .zip(shifts)
            .zip(theta)
            .map(|((xi, &k), t)| {
                let q = if leader {
                    xi.0 >> k
                } else {
                    ((xi.0 as u128 + (1u128 << k) - 1) >> k) as u64
                };
                RingElement(q) - t * RingElement(1u64 << (64 - k))
            })
            .collect())
    })
}

/// Shares of `x / 2^k` (1 round).
pub fn public_div(p: &mut Party, x: &ArithmeticShare, k: u32) -> Result<ArithmeticShare> {
    let out = p.scoped("public_div", |p| truncate_many(p, x.data(), &vec![k; x.len()]))?;
    Ok(ArithmeticShare::new(
        x.party,
        RingTensor::from_vec(x.shape(), out)?,
    ))
}
