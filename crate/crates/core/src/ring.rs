//! Fixed-point encoding over the ring Z/2^64.
//!
//! Every value handled by the secure protocols lives in `Z/QZ` with `Q = 2^64`;
//! native wrapping `u64` arithmetic is exactly arithmetic modulo `Q`. Reals are
//! mapped into the ring by scaling with `B = 2^L` and rounding, negatives use the
//! two's-complement representative, so the most significant bit is the sign.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Default number of fractional bits.
pub const DEFAULT_PRECISION_BITS: u32 = 20;

/// An element of `Z/2^64`.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(transparent)]
pub struct RingElement(pub u64);

impl RingElement {
    pub const ZERO: RingElement = RingElement(0);
    pub const ONE: RingElement = RingElement(1);

    #[inline]
    pub const fn new(value: u64) -> Self {
        RingElement(value)
    }

    /// Embeds a signed integer via two's complement.
    #[inline]
    pub const fn from_i64(value: i64) -> Self {
        RingElement(value as u64)
    }

    #[inline]
    pub const fn value(self) -> u64 {
        self.0
    }

    /// Signed representative in `[-Q/2, Q/2)`.
    #[inline]
    pub const fn signed(self) -> i64 {
        self.0 as i64
    }

    #[inline]
    pub const fn msb(self) -> bool {
        self.0 >> 63 == 1
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R({})", self.0)
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for RingElement {
    fn from(v: u64) -> Self {
        RingElement(v)
    }
}

impl Add for RingElement {
    type Output = RingElement;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        RingElement(self.0.wrapping_add(rhs.0))
    }
}

impl Sub for RingElement {
    type Output = RingElement;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        RingElement(self.0.wrapping_sub(rhs.0))
    }
}

impl Mul for RingElement {
    type Output = RingElement;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        RingElement(self.0.wrapping_mul(rhs.0))
    }
}

impl Neg for RingElement {
    type Output = RingElement;
    #[inline]
    fn neg(self) -> Self {
        RingElement(self.0.wrapping_neg())
    }
}

impl AddAssign for RingElement {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_add(rhs.0);
    }
}

impl SubAssign for RingElement {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_sub(rhs.0);
    }
}

impl MulAssign for RingElement {
    #[inline]
    fn mul_assign(&mut self, rhs: Self) {
        self.0 = self.0.wrapping_mul(rhs.0);
    }
}

impl Sum for RingElement {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(RingElement::ZERO, |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a RingElement> for RingElement {
    fn sum<I: Iterator<Item = &'a RingElement>>(iter: I) -> Self {
        iter.fold(RingElement::ZERO, |acc, x| acc + *x)
    }
}

pub fn ring_add(a: RingElement, b: RingElement) -> RingElement {
    a + b
}

pub fn ring_sub(a: RingElement, b: RingElement) -> RingElement {
    a - b
}

pub fn ring_mul(a: RingElement, b: RingElement) -> RingElement {
    a * b
}

/// Fixed-point parameters: `L` fractional bits, scale `B = 2^L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedPointConfig {
    precision_bits: u32,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig {
            precision_bits: DEFAULT_PRECISION_BITS,
        }
    }
}

impl FixedPointConfig {
    pub fn new(precision_bits: u32) -> Result<Self> {
        if precision_bits == 0 || precision_bits >= 32 {
            return Err(Error::InvalidPrecision(precision_bits));
        }
        Ok(FixedPointConfig { precision_bits })
    }

    #[inline]
    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// The scale `B` as an integer.
    #[inline]
    pub fn scale(&self) -> u64 {
        1u64 << self.precision_bits
    }

    #[inline]
    pub fn scale_f64(&self) -> f64 {
        self.scale() as f64
    }

    /// Encoding of the real number one.
    #[inline]
    pub fn one(&self) -> RingElement {
        RingElement(self.scale())
    }

    pub fn encode(&self, x: f64) -> Result<RingElement> {
        encode(x, *self)
    }

    pub fn decode(&self, x: RingElement) -> f64 {
        decode(x, *self)
    }

    /// Encodes a slice, failing on the first out-of-range value.
    pub fn encode_all(&self, xs: &[f64]) -> Result<Vec<RingElement>> {
        xs.iter().map(|&x| encode(x, *self)).collect()
    }

    pub fn decode_all(&self, xs: &[RingElement]) -> Vec<f64> {
        xs.iter().map(|&x| decode(x, *self)).collect()
    }
}

/// `round_half_even(B * x)` mapped into the ring.
pub fn encode(x: f64, cfg: FixedPointConfig) -> Result<RingElement> {
    let scaled = (x * cfg.scale_f64()).round_ties_even();
    // |scaled| must stay strictly inside the signed half of the ring
    if !scaled.is_finite() || scaled.abs() >= 2f64.powi(63) {
        return Err(Error::EncodingRange {
            value: x,
            precision_bits: cfg.precision_bits(),
        });
    }
    Ok(RingElement::from_i64(scaled as i64))
}

pub fn decode(x: RingElement, cfg: FixedPointConfig) -> f64 {
    x.signed() as f64 / cfg.scale_f64()
}
