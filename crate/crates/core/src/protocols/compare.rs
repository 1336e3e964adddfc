//! Secure comparison via the sign bit of a difference.

use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::sharing::ArithmeticShare;
use crate::tensor::RingTensor;

use super::binary::{binary_inputs, csa_reduce, kogge_stone_prefix};
use super::Party;

/// Polynomial over three 0/1 variables, coefficient `c[m]` for the monomial
/// whose variables are the set bits of `m`.
#[derive(Clone, Copy)]
struct BitPoly([i64; 8]);

impl BitPoly {
    fn constant(c: i64) -> Self {
        let mut v = [0; 8];
        v[0] = c;
        BitPoly(v)
    }

    /// `m XOR rho_var` for a public bit `m`, as an affine form in `rho_var`.
    fn unmask(m: bool, var: usize) -> Self {
        let mut v = [0; 8];
        if m {
            v[0] = 1;
            v[1 << var] = -1;
        } else {
            v[1 << var] = 1;
        }
        BitPoly(v)
    }

    fn mul(&self, o: &BitPoly) -> BitPoly {
        let mut v = [0i64; 8];
        for (i, a) in self.0.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.0.iter().enumerate() {
                v[i | j] += a * b;
            }
        }
        BitPoly(v)
    }

    fn add(&self, o: &BitPoly, k: i64) -> BitPoly {
        let mut v = self.0;
        for (x, y) in v.iter_mut().zip(o.0) {
            *x += k * y;
        }
        BitPoly(v)
    }
}

/// Position of each monomial mask in the dealer's bit-table layout
/// `[r1, r2, r3, r1r2, r1r3, r2r3, r1r2r3]`.
const TABLE_SLOT: [usize; 8] = [usize::MAX, 0, 1, 3, 2, 4, 5, 6];

/// Shares of `1 - msb(d)` at integer scale, i.e. `[d >= 0]` on the signed
/// interpretation. 7 rounds for two parties.
pub fn nonnegative(p: &mut Party, d: &[RingElement]) -> Result<Vec<RingElement>> {
    p.scoped("sec_ge", |p| {
        let len = d.len();
        let inputs = binary_inputs(p, d)?;
        let (a, b) = if inputs.len() == 2 {
            let mut it = inputs.into_iter();
            (it.next().unwrap(), it.next().unwrap())
        } else {
            csa_reduce(p, inputs)?
        };
        let st = kogge_stone_prefix(p, &a, &b, 5)?;
        let table = p.preprocessing(Request::BitTable { len })?;
        let (rho, mono) = table.split_at(len);
        let packed: Vec<u64> = (0..len)
            .map(|i| {
                let t = ((st.p0[i] >> 63) ^ (st.g[i] >> 62)) & 1;
                let u = (st.p[i] >> 62) & 1;
                let w = (st.g[i] >> 30) & 1;
                (t | (u << 1) | (w << 2)) ^ rho[i]
            })
            .collect();
        let opened = p.open_xor(&packed)?;
        let leader = p.is_leader();
        Ok((0..len)
            .map(|i| {
                let m = opened[i];
                let t = BitPoly::unmask(m & 1 == 1, 0);
                let u = BitPoly::unmask(m & 2 == 2, 1);
                let w = BitPoly::unmask(m & 4 == 4, 2);
                let uw = u.mul(&w);
                let msb = t.add(&uw, 1).add(&t.mul(&uw), -2);
                let ge = BitPoly::constant(1).add(&msb, -1);
                let mut acc = RingElement::ZERO;
                for (mask, &c) in ge.0.iter().enumerate().skip(1) {
                    if c != 0 {
                        acc += RingElement::from_i64(c) * RingElement(mono[i * 7 + TABLE_SLOT[mask]]);
                    }
                }
                if leader {
                    acc += RingElement::from_i64(ge.0[0]);
                }
                acc
            })
            .collect())
    })
}

/// Element-wise `[x_i >= y_i]` at integer scale.
pub fn sec_ge_batch(p: &mut Party, x: &[RingElement], y: &[RingElement]) -> Result<Vec<RingElement>> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("compare {} with {}", x.len(), y.len())));
    }
    let d: Vec<RingElement> = x.iter().zip(y).map(|(a, b)| *a - *b).collect();
    nonnegative(p, &d)
}

/// Shares of `1` if `decode(x) >= decode(y)`, else `0` (integer scale).
pub fn sec_ge(p: &mut Party, x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    let out = sec_ge_batch(p, x.data(), y.data())?;
    Ok(ArithmeticShare::new(x.party, RingTensor::from_vec(x.shape(), out)?))
}
