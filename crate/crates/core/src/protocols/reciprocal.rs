//! Reciprocal by Newton-Raphson from an exponential initial guess.
//!
//! `x0 = scale * exp(0.5 - x) + offset`, where `exp(u)` is approximated on
//! shares by `(1 + u / 2^k)^(2^k)` using `k` squarings. The iteration runs on
//! the pair `(x_i, e_i)` with `e_i = 1 - x x_i`:
//! `x_{i+1} = x_i (1 + e_i)`, `e_{i+1} = e_i^2`, both products in one batch.

use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::sharing::ArithmeticShare;
use crate::tensor::RingTensor;

use super::arith::{beaver_fixed, beaver_raw, Job};
use super::truncate::truncate_many;
use super::Party;

/// Constants of the initial guess `scale * exp(0.5 - x) + offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReciprocalInit {
    pub scale: i64,
    pub offset: f64,
}

impl ReciprocalInit {
    /// Fitted for inputs in `[1, 10]`; keeps `|1 - x x0| < 0.34` there.
    pub const TUNED: ReciprocalInit = ReciprocalInit {
        scale: 2,
        offset: 0.1144,
    };
    /// `3 exp(0.5 - x) + 0.003`.
    pub const CLASSIC: ReciprocalInit = ReciprocalInit {
        scale: 3,
        offset: 0.003,
    };
}

impl Default for ReciprocalInit {
    fn default() -> Self {
        Self::TUNED
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReciprocalConfig {
    pub iterations: usize,
    /// Squarings in the exponential approximation.
    pub exp_squarings: u32,
    pub init: ReciprocalInit,
}

impl Default for ReciprocalConfig {
    fn default() -> Self {
        ReciprocalConfig {
            iterations: 7,
            exp_squarings: 7,
            init: ReciprocalInit::TUNED,
        }
    }
}

impl ReciprocalConfig {
    pub fn with_iterations(iterations: usize) -> Self {
        ReciprocalConfig {
            iterations,
            ..Self::default()
        }
    }

    /// Two rounds per squaring, two for the initial residual, two per
    /// iteration.
    pub fn rounds(&self) -> u64 {
        2 * self.exp_squarings as u64 + 2 + 2 * self.iterations as u64
    }

    /// Plaintext model of the secure computation, without rounding.
    pub fn reference(&self, x: f64) -> f64 {
        let k = self.exp_squarings;
        let e = (1.0 + (0.5 - x) / 2f64.powi(k as i32)).powi(1 << k);
        let mut xi = self.init.scale as f64 * e + self.init.offset;
        let mut err = 1.0 - x * xi;
        for _ in 0..self.iterations {
            xi *= 1.0 + err;
            err *= err;
        }
        xi
    }
}

/// Shares of `1 / x` for fixed-point `x`, element-wise. Inputs are expected in
/// `[1, 10]`; outside that range convergence is not guaranteed.
pub fn reciprocal(p: &mut Party, x: &RingTensor, cfg: &ReciprocalConfig) -> Result<RingTensor> {
    let k = cfg.exp_squarings;
    let fx = p.fx();
    let l = fx.precision_bits();
    if k == 0 || l + 2 * k >= 64 {
        return Err(Error::InvalidArgument(format!(
            "{k} squarings at {l} precision bits"
        )));
    }
    p.scoped("reciprocal", |p| {
        let len = x.len();
        let one = fx.one();
        let half = RingElement(one.0 >> 1);
        // u = 0.5 - x
        let u = x.map(|v| -v);
        let u = add_const(p, &u, half);
        // (1 + u/2^k)^2 = 1 + u/2^(k-1) + u^2/2^(2k), one shared truncation
        let sq = beaver_raw(p, &[Job::Square(&u)])?.pop().unwrap();
        let mut s = if k == 1 {
            let t = truncate_many(p, sq.data(), &vec![l + 2; len])?;
            let mut s = RingTensor::from_vec(x.shape(), t)?;
            s.add_assign(&u)?;
            s
        } else {
            let mut joint: Vec<RingElement> = sq.data().to_vec();
            joint.extend_from_slice(u.data());
            let mut shifts = vec![l + 2 * k; len];
            shifts.extend(std::iter::repeat_n(k - 1, len));
            let t = truncate_many(p, &joint, &shifts)?;
            let mut s = RingTensor::from_vec(x.shape(), t[..len].to_vec())?;
            s.add_assign(&RingTensor::from_vec(x.shape(), t[len..].to_vec())?)?;
            s
        };
        s = add_const(p, &s, one);
        for _ in 1..k {
            s = beaver_fixed(p, &[Job::Square(&s)])?.pop().unwrap();
        }
        let offset = fx.encode(cfg.init.offset)?;
        let x0 = add_const(p, &s.scale(RingElement::from_i64(cfg.init.scale)), offset);
        let xx0 = beaver_fixed(p, &[Job::Hadamard(x, &x0)])?.pop().unwrap();
        let mut err = add_const(p, &xx0.neg(), one);
        let mut xi = x0;
        for it in 0..cfg.iterations {
            let one_plus = add_const(p, &err, one);
            if it + 1 == cfg.iterations {
                xi = beaver_fixed(p, &[Job::Hadamard(&xi, &one_plus)])?.pop().unwrap();
            } else {
                let mut out = beaver_fixed(p, &[Job::Hadamard(&xi, &one_plus), Job::Square(&err)])?;
                err = out.pop().unwrap();
                xi = out.pop().unwrap();
            }
        }
        Ok(xi)
    })
}

fn add_const(p: &Party, t: &RingTensor, c: RingElement) -> RingTensor {
    if p.is_leader() {
        t.map(|v| v + c)
    } else {
        t.clone()
    }
}

pub fn sec_reciprocal(
    p: &mut Party,
    x: &ArithmeticShare,
    cfg: &ReciprocalConfig,
) -> Result<ArithmeticShare> {
    Ok(ArithmeticShare::new(x.party, reciprocal(p, &x.tensor, cfg)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_decomposition() {
        assert_eq!(ReciprocalConfig::default().rounds(), 30);
        assert_eq!(ReciprocalConfig::with_iterations(3).rounds(), 22);
    }

    #[test]
    fn tuned_reference_is_accurate() {
        let c7 = ReciprocalConfig::default();
        let c3 = ReciprocalConfig::with_iterations(3);
        for i in 0..=900 {
            let x = 1.0 + i as f64 * 0.01;
            assert!((c7.reference(x) * x - 1.0).abs() < 1e-9);
            assert!((c3.reference(x) * x - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn classic_constants_are_slow_at_ten() {
        let c = ReciprocalConfig {
            init: ReciprocalInit::CLASSIC,
            ..ReciprocalConfig::default()
        };
        assert!((c.reference(10.0) * 10.0 - 1.0).abs() > 1e-3);
    }
}
