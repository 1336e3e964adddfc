//! Additive (arithmetic) and XOR (binary) secret sharing.

mod convert;

use rand::Rng;

use crate::error::{Error, Result};
use crate::ring::RingElement;
use crate::tensor::{RingTensor, Shape};

pub use convert::{a2b, b2a, b2a_single_bit};

/// One party's additive share of a ring tensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArithmeticShare {
    pub party: usize,
    pub tensor: RingTensor,
}

impl ArithmeticShare {
    pub fn new(party: usize, tensor: RingTensor) -> Self {
        ArithmeticShare { party, tensor }
    }

    pub fn shape(&self) -> Shape {
        self.tensor.shape()
    }

    pub fn len(&self) -> usize {
        self.tensor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensor.is_empty()
    }

    pub fn data(&self) -> &[RingElement] {
        self.tensor.data()
    }

    /// Share of the public constant `c`: party 0 holds `c`, everyone else 0.
    pub fn public(party: usize, tensor: RingTensor) -> Self {
        if party == 0 {
            ArithmeticShare::new(party, tensor)
        } else {
            ArithmeticShare::new(party, RingTensor::zeros(tensor.shape()))
        }
    }

    pub fn from_elements(party: usize, data: Vec<RingElement>) -> Self {
        ArithmeticShare::new(party, RingTensor::vector(data))
    }
}

/// One party's XOR share of a tensor of 64-bit strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryShare {
    pub party: usize,
    pub shape: Shape,
    pub bits: Vec<u64>,
}

impl BinaryShare {
    pub fn new(party: usize, shape: Shape, bits: Vec<u64>) -> Result<Self> {
        if bits.len() != shape.len() {
            return Err(Error::Shape(format!(
                "{} words do not fit {:?}",
                bits.len(),
                shape
            )));
        }
        Ok(BinaryShare { party, shape, bits })
    }

    pub fn vector(party: usize, bits: Vec<u64>) -> Self {
        BinaryShare {
            party,
            shape: Shape::vector(bits.len()),
            bits,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Uniform shares for parties `1..n`; party 0 gets the remainder.
pub fn share_words<R: Rng + ?Sized>(secret: &[u64], parties: usize, rng: &mut R) -> Vec<Vec<u64>> {
    let mut out = vec![secret.to_vec()];
    for _ in 1..parties {
        let s: Vec<u64> = (0..secret.len()).map(|_| rng.next_u64()).collect();
        for (o, v) in out[0].iter_mut().zip(&s) {
            *o = o.wrapping_sub(*v);
        }
        out.push(s);
    }
    out
}

pub fn xor_share_words<R: Rng + ?Sized>(
    secret: &[u64],
    parties: usize,
    rng: &mut R,
) -> Vec<Vec<u64>> {
    let mut out = vec![secret.to_vec()];
    for _ in 1..parties {
        let s: Vec<u64> = (0..secret.len()).map(|_| rng.next_u64()).collect();
        for (o, v) in out[0].iter_mut().zip(&s) {
            *o ^= *v;
        }
        out.push(s);
    }
    out
}

pub fn share_arithmetic<R: Rng + ?Sized>(
    x: &RingTensor,
    parties: usize,
    rng: &mut R,
) -> Result<Vec<ArithmeticShare>> {
    if parties < 2 {
        return Err(Error::PartyCount {
            expected: 2,
            got: parties,
        });
    }
    share_words(&x.to_u64(), parties, rng)
        .into_iter()
        .enumerate()
        .map(|(p, w)| Ok(ArithmeticShare::new(p, RingTensor::from_u64(x.shape(), w)?)))
        .collect()
}

pub fn share_binary<R: Rng + ?Sized>(
    bits: &[u64],
    shape: Shape,
    parties: usize,
    rng: &mut R,
) -> Result<Vec<BinaryShare>> {
    if parties < 2 {
        return Err(Error::PartyCount {
            expected: 2,
            got: parties,
        });
    }
    xor_share_words(bits, parties, rng)
        .into_iter()
        .enumerate()
        .map(|(p, w)| BinaryShare::new(p, shape, w))
        .collect()
}

fn check_parties<T>(shares: &[T], party_of: impl Fn(&T) -> usize) -> Result<()> {
    if shares.is_empty() {
        return Err(Error::PartyCount {
            expected: 1,
            got: 0,
        });
    }
    for (i, s) in shares.iter().enumerate() {
        if party_of(s) != i {
            return Err(Error::InvalidArgument(format!(
                "share {i} belongs to party {}",
                party_of(s)
            )));
        }
    }
    Ok(())
}

/// Modular sum of one share per party.
pub fn reconstruct(shares: &[ArithmeticShare]) -> Result<RingTensor> {
    check_parties(shares, |s| s.party)?;
    let mut acc = shares[0].tensor.clone();
    for s in &shares[1..] {
        acc.add_assign(&s.tensor)?;
    }
    Ok(acc)
}

/// XOR of one share per party.
pub fn reconstruct_binary(shares: &[BinaryShare]) -> Result<Vec<u64>> {
    check_parties(shares, |s| s.party)?;
    let shape = shares[0].shape;
    let mut acc = shares[0].bits.clone();
    for s in &shares[1..] {
        if s.shape != shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", s.shape, shape)));
        }
        for (a, b) in acc.iter_mut().zip(&s.bits) {
            *a ^= *b;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    #[test]
    fn two_party_reconstruction_example() {
        let shares = vec![
            ArithmeticShare::from_elements(0, vec![RingElement(5)]),
            ArithmeticShare::from_elements(1, vec![RingElement(u64::MAX - 1)]),
        ];
        assert_eq!(reconstruct(&shares).unwrap()[0], RingElement(3));
    }

    #[test]
    fn binary_reconstruction_example() {
        let shares = vec![
            BinaryShare::vector(0, vec![0b1010]),
            BinaryShare::vector(1, vec![0b0110]),
        ];
        assert_eq!(reconstruct_binary(&shares).unwrap(), vec![0b1100]);
    }

    #[test]
    fn zero_shares_are_negatives() {
        let x = RingTensor::zeros(Shape::vector(16));
        let s = share_arithmetic(&x, 2, &mut rng(1)).unwrap();
        for (a, b) in s[0].data().iter().zip(s[1].data()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn three_party_round_trip_many() {
        let mut r = rng(2);
        let words: Vec<u64> = (0..10_000).map(|_| r.next_u64()).collect();
        let x = RingTensor::from_u64(Shape::vector(words.len()), words).unwrap();
        let s = share_arithmetic(&x, 3, &mut r).unwrap();
        assert_eq!(reconstruct(&s).unwrap(), x);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = ArithmeticShare::from_elements(0, vec![RingElement(1)]);
        let b = ArithmeticShare::from_elements(1, vec![RingElement(1), RingElement(2)]);
        assert!(reconstruct(&[a.clone(), b]).is_err());
        assert!(reconstruct(&[]).is_err());
        let swapped = ArithmeticShare::from_elements(1, vec![RingElement(1)]);
        assert!(reconstruct(&[swapped, a]).is_err());
        assert!(share_arithmetic(&RingTensor::zeros(Shape::scalar()), 1, &mut rng(0)).is_err());
    }

    proptest! {
        #[test]
        fn share_reconstruct_identity(xs in proptest::collection::vec(any::<u64>(), 1..32), n in 2usize..6, seed: u64) {
            let x = RingTensor::from_u64(Shape::vector(xs.len()), xs.clone()).unwrap();
            let s = share_arithmetic(&x, n, &mut rng(seed)).unwrap();
            prop_assert_eq!(reconstruct(&s).unwrap(), x);
            let b = share_binary(&xs, Shape::vector(xs.len()), n, &mut rng(seed)).unwrap();
            prop_assert_eq!(reconstruct_binary(&b).unwrap(), xs);
        }

        #[test]
        fn sharing_is_linear(x: u64, y: u64, seed: u64) {
            let mut r = rng(seed);
            let sx = share_arithmetic(&RingTensor::vector(vec![RingElement(x)]), 3, &mut r).unwrap();
            let sy = share_arithmetic(&RingTensor::vector(vec![RingElement(y)]), 3, &mut r).unwrap();
            let sum: Vec<ArithmeticShare> = sx.iter().zip(&sy)
                .map(|(a, b)| ArithmeticShare::new(a.party, a.tensor.add(&b.tensor).unwrap()))
                .collect();
            prop_assert_eq!(reconstruct(&sum).unwrap()[0], RingElement(x.wrapping_add(y)));
        }
    }
}
