//! Linear operations and Beaver-triple products.

use crate::dealer::Request;
use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::sharing::ArithmeticShare;
use crate::tensor::{RingTensor, Shape};

use super::truncate::truncate_many;
use super::Party;

/// A product to evaluate in a batched Beaver round.
#[derive(Clone, Copy, Debug)]
pub enum Job<'a> {
    /// Element-wise product of equally shaped tensors.
    Hadamard(&'a RingTensor, &'a RingTensor),
    /// Batched matrix product `(b, m, k) x (b, k, n)`.
    Matmul(&'a RingTensor, &'a RingTensor),
    /// Element-wise square via a square pair.
    Square(&'a RingTensor),
}

pub fn sec_add(x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    Ok(ArithmeticShare::new(x.party, x.tensor.add(&y.tensor)?))
}

pub fn sec_sub(x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    Ok(ArithmeticShare::new(x.party, x.tensor.sub(&y.tensor)?))
}

/// Adds a public tensor (party 0 only).
pub fn sec_add_public(x: &ArithmeticShare, c: &RingTensor) -> Result<ArithmeticShare> {
    if x.party == 0 {
        Ok(ArithmeticShare::new(0, x.tensor.add(c)?))
    } else if x.shape() != c.shape() {
        Err(Error::Shape(format!("{:?} vs {:?}", x.shape(), c.shape())))
    } else {
        Ok(x.clone())
    }
}

/// Multiplies every share by a public integer.
pub fn sec_scale_int(x: &ArithmeticShare, k: i64) -> ArithmeticShare {
    ArithmeticShare::new(x.party, x.tensor.scale(RingElement::from_i64(k)))
}

struct Prepared {
    mask_a: RingTensor,
    mask_b: Option<RingTensor>,
    mask_c: RingTensor,
}

fn matmul_dims(l: Shape, r: Shape) -> Result<(usize, usize, usize, usize)> {
    if l.batch != r.batch || l.cols != r.rows {
        return Err(Error::Shape(format!("cannot multiply {:?} by {:?}", l, r)));
    }
    Ok((l.batch, l.rows, l.cols, r.cols))
}

/// Raw ring products of all jobs, sharing one opening round. Results carry the
/// product of the operand scales and are not truncated.
pub fn beaver_raw(p: &mut Party, jobs: &[Job<'_>]) -> Result<Vec<RingTensor>> {
    let mut prepared = Vec::with_capacity(jobs.len());
    let mut masked: Vec<RingElement> = Vec::new();
    for job in jobs {
        match *job {
            Job::Hadamard(x, y) => {
                if x.shape() != y.shape() {
                    return Err(Error::Shape(format!("{:?} vs {:?}", x.shape(), y.shape())));
                }
                let len = x.len();
                let w = p.preprocessing(Request::MatTriple {
                    batch: len,
                    m: 1,
                    k: 1,
                    n: 1,
                })?;
                let s = x.shape();
                let a = RingTensor::from_u64(s, w[..len].to_vec())?;
                let b = RingTensor::from_u64(s, w[len..2 * len].to_vec())?;
                let c = RingTensor::from_u64(s, w[2 * len..].to_vec())?;
                masked.extend_from_slice(x.sub(&a)?.data());
                masked.extend_from_slice(y.sub(&b)?.data());
                prepared.push(Prepared {
                    mask_a: a,
                    mask_b: Some(b),
                    mask_c: c,
                });
            }
            Job::Matmul(x, y) => {
                let (batch, m, k, n) = matmul_dims(x.shape(), y.shape())?;
                let w = p.preprocessing(Request::MatTriple { batch, m, k, n })?;
                let (la, lb) = (batch * m * k, batch * k * n);
                let a = RingTensor::from_u64(x.shape(), w[..la].to_vec())?;
                let b = RingTensor::from_u64(y.shape(), w[la..la + lb].to_vec())?;
                let c = RingTensor::from_u64(Shape::new(batch, m, n), w[la + lb..].to_vec())?;
                masked.extend_from_slice(x.sub(&a)?.data());
                masked.extend_from_slice(y.sub(&b)?.data());
                prepared.push(Prepared {
                    mask_a: a,
                    mask_b: Some(b),
                    mask_c: c,
                });
            }
            Job::Square(x) => {
                let len = x.len();
                let w = p.preprocessing(Request::SquarePair { len })?;
                let a = RingTensor::from_u64(x.shape(), w[..len].to_vec())?;
                let a2 = RingTensor::from_u64(x.shape(), w[len..].to_vec())?;
                masked.extend_from_slice(x.sub(&a)?.data());
                prepared.push(Prepared {
                    mask_a: a,
                    mask_b: None,
                    mask_c: a2,
                });
            }
        }
    }
    let opened = p.open(&masked)?;
    let leader = p.is_leader();
    let mut off = 0;
    let mut take = |shape: Shape| -> Result<RingTensor> {
        let t = RingTensor::from_vec(shape, opened[off..off + shape.len()].to_vec())?;
        off += shape.len();
        Ok(t)
    };
    let mut out = Vec::with_capacity(jobs.len());
    for (job, prep) in jobs.iter().zip(prepared) {
        match *job {
            Job::Hadamard(x, y) => {
                let e = take(x.shape())?;
                let f = take(y.shape())?;
                let b = prep.mask_b.as_ref().unwrap();
                let mut z = prep.mask_c;
                z.add_assign(&e.hadamard(b)?)?;
                z.add_assign(&f.hadamard(&prep.mask_a)?)?;
                if leader {
                    z.add_assign(&e.hadamard(&f)?)?;
                }
                out.push(z);
            }
            Job::Matmul(x, y) => {
                let e = take(x.shape())?;
                let f = take(y.shape())?;
                let b = prep.mask_b.as_ref().unwrap();
                let mut z = prep.mask_c;
                z.add_assign(&e.matmul(b)?)?;
                z.add_assign(&prep.mask_a.matmul(&f)?)?;
                if leader {
                    z.add_assign(&e.matmul(&f)?)?;
                }
                out.push(z);
            }
            Job::Square(x) => {
                let e = take(x.shape())?;
                let mut z = prep.mask_c;
                z.add_assign(&e.hadamard(&prep.mask_a)?.scale(RingElement(2)))?;
                if leader {
                    z.add_assign(&e.hadamard(&e)?)?;
                }
                out.push(z);
            }
        }
    }
    Ok(out)
}

/// Fixed-point products: one opening round, then one truncation round by `L`
/// covering every job.
pub fn beaver_fixed(p: &mut Party, jobs: &[Job<'_>]) -> Result<Vec<RingTensor>> {
    let raw = beaver_raw(p, jobs)?;
    let l = p.fx().precision_bits();
    let flat: Vec<RingElement> = raw.iter().flat_map(|t| t.data().iter().copied()).collect();
    let shifts = vec![l; flat.len()];
    let truncated = truncate_many(p, &flat, &shifts)?;
    let mut off = 0;
    raw.iter()
        .map(|t| {
            let r = RingTensor::from_vec(t.shape(), truncated[off..off + t.len()].to_vec());
            off += t.len();
            r
        })
        .collect()
}

fn single(p: &mut Party, label: &str, job: Job<'_>, party: usize) -> Result<ArithmeticShare> {
    let mut out = p.scoped(label, |p| beaver_fixed(p, &[job]))?;
    Ok(ArithmeticShare::new(party, out.pop().unwrap()))
}

/// Fixed-point element-wise product (2 rounds).
pub fn sec_mul(p: &mut Party, x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    single(p, "mul", Job::Hadamard(&x.tensor, &y.tensor), x.party)
}

/// Fixed-point square with a square pair (2 rounds).
pub fn sec_square(p: &mut Party, x: &ArithmeticShare) -> Result<ArithmeticShare> {
    single(p, "square", Job::Square(&x.tensor), x.party)
}

/// Fixed-point batched matrix product (2 rounds).
pub fn sec_matmul(
    p: &mut Party,
    a: &ArithmeticShare,
    b: &ArithmeticShare,
) -> Result<ArithmeticShare> {
    single(p, "matmul", Job::Matmul(&a.tensor, &b.tensor), a.party)
}

/// `A x` for a matrix `(1, m, k)` and a vector of length `k`.
pub fn sec_matvec(
    p: &mut Party,
    a: &ArithmeticShare,
    x: &ArithmeticShare,
) -> Result<ArithmeticShare> {
    let x = x.tensor.clone().reshape(Shape::new(1, x.len(), 1))?;
    let out = single(p, "matvec", Job::Matmul(&a.tensor, &x), a.party)?;
    let len = out.len();
    Ok(ArithmeticShare::new(out.party, out.tensor.reshape(Shape::vector(len))?))
}

/// Inner product of two vectors.
pub fn sec_dot(p: &mut Party, x: &ArithmeticShare, y: &ArithmeticShare) -> Result<ArithmeticShare> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("dot of {} and {}", x.len(), y.len())));
    }
    let row = x.tensor.clone().reshape(Shape::new(1, 1, x.len()))?;
    let col = y.tensor.clone().reshape(Shape::new(1, y.len(), 1))?;
    let out = single(p, "dot", Job::Matmul(&row, &col), x.party)?;
    Ok(ArithmeticShare::new(out.party, out.tensor.reshape(Shape::scalar())?))
}

/// Integer-scale element-wise product, no truncation (1 round).
pub fn mul_int(p: &mut Party, x: &RingTensor, y: &RingTensor) -> Result<RingTensor> {
    Ok(beaver_raw(p, &[Job::Hadamard(x, y)])?.pop().unwrap())
}
