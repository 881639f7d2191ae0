//! Labeled Fiat–Shamir transcript over SHAKE256.

use bls12_381::{G1Projective, Scalar};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use super::codec::{g1_to_bytes, scalar_to_bytes};

/// Accumulates labeled protocol messages and squeezes challenges from them.
///
/// Every absorb is framed with the label and payload lengths, so distinct
/// histories never collide by concatenation. Each challenge is folded back
/// into the state; two challenges in a row are therefore independent.
#[derive(Clone)]
pub struct Transcript {
    state: Shake256,
}

impl Transcript {
    pub fn new(domain: &'static [u8]) -> Self {
        let mut t = Self {
            state: Shake256::default(),
        };
        t.absorb(b"iuguard-transcript-v1", domain);
        t
    }

    pub fn absorb(&mut self, label: &'static [u8], bytes: &[u8]) {
        self.state.update(&(label.len() as u32).to_be_bytes());
        self.state.update(label);
        self.state.update(&(bytes.len() as u64).to_be_bytes());
        self.state.update(bytes);
    }

    pub fn absorb_point(&mut self, label: &'static [u8], p: &G1Projective) {
        self.absorb(label, &g1_to_bytes(p));
    }

    pub fn absorb_scalar(&mut self, label: &'static [u8], s: &Scalar) {
        self.absorb(label, &scalar_to_bytes(s));
    }

    pub fn absorb_u64(&mut self, label: &'static [u8], v: u64) {
        self.absorb(label, &v.to_be_bytes());
    }

    pub fn challenge(&mut self, label: &'static [u8]) -> Scalar {
        self.absorb(b"challenge", label);
        let mut wide = [0u8; 64];
        self.state.clone().finalize_xof().read(&mut wide);
        let c = Scalar::from_bytes_wide(&wide);
        self.absorb(b"challenge-out", &scalar_to_bytes(&c));
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_histories_agree() {
        let mut a = Transcript::new(b"test");
        let mut b = Transcript::new(b"test");
        a.absorb(b"x", b"hello");
        b.absorb(b"x", b"hello");
        assert_eq!(a.challenge(b"c"), b.challenge(b"c"));
        assert_eq!(a.challenge(b"c"), b.challenge(b"c"));
    }

    #[test]
    fn reordering_changes_challenge() {
        let mut a = Transcript::new(b"test");
        let mut b = Transcript::new(b"test");
        a.absorb(b"x", b"1");
        a.absorb(b"y", b"2");
        b.absorb(b"y", b"2");
        b.absorb(b"x", b"1");
        assert_ne!(a.challenge(b"c"), b.challenge(b"c"));
    }

    #[test]
    fn framing_prevents_concatenation_collisions() {
        let mut a = Transcript::new(b"test");
        let mut b = Transcript::new(b"test");
        a.absorb(b"x", b"ab");
        a.absorb(b"x", b"c");
        b.absorb(b"x", b"a");
        b.absorb(b"x", b"bc");
        assert_ne!(a.challenge(b"c"), b.challenge(b"c"));
    }

    #[test]
    fn successive_challenges_differ() {
        let mut a = Transcript::new(b"test");
        let c1 = a.challenge(b"c");
        let c2 = a.challenge(b"c");
        assert_ne!(c1, c2);
    }

    #[test]
    fn domain_separates() {
        assert_ne!(
            Transcript::new(b"one").challenge(b"c"),
            Transcript::new(b"two").challenge(b"c")
        );
    }
}
