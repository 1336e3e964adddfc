//! Conversions between arithmetic and binary sharings.

use crate::dealer::Request;
use crate::error::Result;
use crate::ring::RingElement;
use crate::protocols::binary::{binary_add, binary_inputs, csa_reduce};
use crate::protocols::Party;
use crate::tensor::RingTensor;

use super::{ArithmeticShare, BinaryShare};

/// Arithmetic to binary: every party's share becomes a binary input and the
/// inputs are summed by a carry-save tree and a log-depth adder (7 rounds for
/// two parties).
pub fn a2b(p: &mut Party, x: &ArithmeticShare) -> Result<BinaryShare> {
    p.scoped("a2b", |p| {
        let inputs = binary_inputs(p, x.data())?;
        let (a, b) = csa_reduce(p, inputs)?;
        let sum = binary_add(p, &a, &b)?;
        BinaryShare::new(x.party, x.shape(), sum)
    })
}

fn b2a_width(p: &mut Party, y: &BinaryShare, width: usize) -> Result<ArithmeticShare> {
    let len = y.len();
    let w = p.preprocessing(Request::DaBits { len, width })?;
    let (rho, arith) = w.split_at(len);
    let mask = if width == 64 { u64::MAX } else { (1u64 << width) - 1 };
    let masked: Vec<u64> = y.bits.iter().zip(rho).map(|(b, r)| (b & mask) ^ r).collect();
    let opened = p.open_xor(&masked)?;
    let leader = p.is_leader();
    let out = (0..len)
        .map(|i| {
            let mut acc = RingElement::ZERO;
            for j in 0..width {
                let r = RingElement(arith[i * width + j]);
                let bit = if (opened[i] >> j) & 1 == 1 {
                    let mut v = -r;
                    if leader {
                        v += RingElement::ONE;
                    }
                    v
                } else {
                    r
                };
                acc += bit * RingElement(1u64 << j);
            }
            acc
        })
        .collect();
    Ok(ArithmeticShare::new(y.party, RingTensor::from_vec(y.shape, out)?))
}

/// Binary to arithmetic with dealer random bits known in both sharings
/// (1 round).
pub fn b2a(p: &mut Party, y: &BinaryShare) -> Result<ArithmeticShare> {
    p.scoped("b2a", |p| b2a_width(p, y, 64))
}

/// Converts the lowest bit of each word to an arithmetic 0/1 (1 round).
pub fn b2a_single_bit(p: &mut Party, bit: &BinaryShare) -> Result<ArithmeticShare> {
    p.scoped("b2a_bit", |p| b2a_width(p, bit, 1))
}
