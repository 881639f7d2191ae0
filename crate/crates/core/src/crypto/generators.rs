//! Nothing-up-my-sleeve generators derived by hashing to G1.

use std::sync::OnceLock;

use bls12_381::hash_to_curve::{ExpandMsgXmd, HashToCurve};
use bls12_381::G1Projective;

use super::msm::{fixed_bases, FixedBase};
use crate::par::Execution;

pub const PEDERSEN_DST: &[u8] = b"IUGUARD-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_PEDERSEN_";
pub const RANGE_DST: &[u8] = b"IUGUARD-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_RANGE_";

/// Largest supported range proof width.
pub const MAX_RANGE_BITS: usize = 32;

pub fn hash_to_g1(dst: &[u8], msg: &[u8]) -> G1Projective {
    <G1Projective as HashToCurve<ExpandMsgXmd<sha2::Sha256>>>::hash_to_curve([msg], dst)
}

/// The two commitment bases `g` (value) and `h` (blinding).
pub struct PedersenGens {
    pub g: FixedBase,
    pub h: FixedBase,
}

pub fn pedersen() -> &'static PedersenGens {
    static GENS: OnceLock<PedersenGens> = OnceLock::new();
    GENS.get_or_init(|| {
        let mut t = fixed_bases(
            Execution::default(),
            &[
                hash_to_g1(PEDERSEN_DST, b"g"),
                hash_to_g1(PEDERSEN_DST, b"h"),
            ],
        );
        let h = t.pop().unwrap();
        let g = t.pop().unwrap();
        PedersenGens { g, h }
    })
}

/// Vector bases for the inner-product range argument.
pub struct RangeGens {
    pub g_vec: Vec<FixedBase>,
    pub h_vec: Vec<FixedBase>,
}

pub fn range_gens() -> &'static RangeGens {
    static GENS: OnceLock<RangeGens> = OnceLock::new();
    GENS.get_or_init(|| {
        let points: Vec<_> = (0..MAX_RANGE_BITS as u32)
            .map(|i| hash_to_g1(RANGE_DST, &[b"G".as_slice(), &i.to_be_bytes()].concat()))
            .chain(
                (0..MAX_RANGE_BITS as u32)
                    .map(|i| hash_to_g1(RANGE_DST, &[b"H".as_slice(), &i.to_be_bytes()].concat())),
            )
            .collect();
        let mut tables = fixed_bases(Execution::default(), &points);
        let h_vec = tables.split_off(MAX_RANGE_BITS);
        RangeGens {
            g_vec: tables,
            h_vec,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn generators_are_distinct_and_nontrivial() {
        let p = pedersen();
        let r = range_gens();
        let mut seen = HashSet::new();
        for t in [&p.g, &p.h].into_iter().chain(&r.g_vec).chain(&r.h_vec) {
            assert!(!bool::from(t.base().is_identity()));
            assert!(seen.insert(super::super::codec::g1_to_bytes(t.base())));
        }
        assert_eq!(seen.len(), 2 + 2 * MAX_RANGE_BITS);
    }
}
