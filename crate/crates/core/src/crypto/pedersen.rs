use std::ops::{Add, Neg, Sub};

use bls12_381::{G1Projective, Scalar};

use super::codec::{tag, Reader, Writer};
use super::generators::pedersen;
use crate::error::Result;

/// `C = g^v · h^blind` over fixed, independently derived bases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PedersenCommitment(pub G1Projective);

/// The secret opening of a commitment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Opening {
    pub value: Scalar,
    pub blind: Scalar,
}

pub fn commit(value: &Scalar, blind: &Scalar) -> PedersenCommitment {
    let gens = pedersen();
    PedersenCommitment(gens.g.mul(value) + gens.h.mul(blind))
}

impl Opening {
    pub fn commit(&self) -> PedersenCommitment {
        commit(&self.value, &self.blind)
    }
}

impl PedersenCommitment {
    pub fn point(&self) -> &G1Projective {
        &self.0
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::COMMITMENT);
        w.g1(&self.0);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::COMMITMENT)?;
        let c = Self(r.g1()?);
        r.finish()?;
        Ok(c)
    }
}

impl Add for PedersenCommitment {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl Sub for PedersenCommitment {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Neg for PedersenCommitment {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ff::Field;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    #[test]
    fn zero_opening_is_identity() {
        assert!(bool::from(
            commit(&Scalar::ZERO, &Scalar::ZERO).0.is_identity()
        ));
    }

    #[test]
    fn homomorphic_over_random_pairs() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (v, r, w, s) = (
                Scalar::random(&mut rng),
                Scalar::random(&mut rng),
                Scalar::random(&mut rng),
                Scalar::random(&mut rng),
            );
            assert_eq!(commit(&v, &r) + commit(&w, &s), commit(&(v + w), &(r + s)));
        }
    }

    #[test]
    fn difference_commits_to_difference() {
        let c = commit(&Scalar::from(10u64), &Scalar::from(3u64))
            - commit(&Scalar::from(4u64), &Scalar::from(1u64));
        assert_eq!(c, commit(&Scalar::from(6u64), &Scalar::from(2u64)));
    }

    #[test]
    fn bytes_round_trip() {
        let c = commit(&Scalar::from(5u64), &Scalar::from(9u64));
        assert_eq!(PedersenCommitment::from_bytes(&c.to_bytes()).unwrap(), c);
        assert!(PedersenCommitment::from_bytes(&c.to_bytes()[..10]).is_err());
    }
}
