//! One-hot argmax with randomized tie breaking.

use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::sharing::ArithmeticShare;
use crate::tensor::RingTensor;

use super::arith::mul_int;
use super::compare::sec_ge_batch;
use super::Party;

/// `y_i = prod_j [x_i >= x_j]`: marks every maximum (integer scale).
/// All `n^2` comparisons share one comparison circuit; the product over `j`
/// is a binary tree of integer multiplications.
pub fn all_maxima(p: &mut Party, x: &[RingElement]) -> Result<Vec<RingElement>> {
    let n = x.len();
    if n == 0 {
        return Err(Error::InvalidArgument("argmax of an empty vector".into()));
    }
    if n == 1 {
        return Ok(vec![p.constant(RingElement::ONE)]);
    }
    let mut lhs = Vec::with_capacity(n * n);
    let mut rhs = Vec::with_capacity(n * n);
    for &xi in x {
        for &xj in x {
            lhs.push(xi);
            rhs.push(xj);
        }
    }
    // rows[i] holds the factors still to be multiplied for element i
    let ge = sec_ge_batch(p, &lhs, &rhs)?;
    let mut rows: Vec<Vec<RingElement>> = ge.chunks(n).map(|c| c.to_vec()).collect();
    while rows[0].len() > 1 {
        let width = rows[0].len();
        let pairs = width / 2;
        let mut a = Vec::with_capacity(n * pairs);
        let mut b = Vec::with_capacity(n * pairs);
        for r in &rows {
            for k in 0..pairs {
                a.push(r[2 * k]);
                b.push(r[2 * k + 1]);
            }
        }
        let prod = mul_int(p, &RingTensor::vector(a), &RingTensor::vector(b))?;
        rows = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut next: Vec<RingElement> = prod.data()[i * pairs..(i + 1) * pairs].to_vec();
                if width % 2 == 1 {
                    next.push(r[width - 1]);
                }
                next
            })
            .collect();
    }
    Ok(rows.into_iter().map(|r| r[0]).collect())
}

/// One-hot shares of a maximum of `x`, ties resolved by the shared random
/// permutation `gamma` (values `1..=n` at integer scale).
pub fn argmax_one_hot(
    p: &mut Party,
    x: &[RingElement],
    gamma: &[RingElement],
) -> Result<Vec<RingElement>> {
    if x.len() != gamma.len() {
        return Err(Error::Shape(format!(
            "{} scores, permutation of {}",
            x.len(),
            gamma.len()
        )));
    }
    p.scoped("argmax", |p| {
        let y = all_maxima(p, x)?;
        if x.len() == 1 {
            return Ok(y);
        }
        let yg = mul_int(p, &RingTensor::vector(y), &RingTensor::vector(gamma.to_vec()))?;
        all_maxima(p, yg.data())
    })
}

pub fn sec_argmax(
    p: &mut Party,
    x: &ArithmeticShare,
    gamma: &ArithmeticShare,
) -> Result<ArithmeticShare> {
    let z = argmax_one_hot(p, x.data(), gamma.data())?;
    Ok(ArithmeticShare::from_elements(x.party, z))
}

/// Rounds used by [`argmax_one_hot`] on `arms` inputs with two parties.
pub fn argmax_rounds_two_party(arms: usize) -> u64 {
    if arms <= 1 {
        return 0;
    }
    let depth = usize::BITS - (arms - 1).leading_zeros();
    2 * (7 + depth as u64) + 1
}
