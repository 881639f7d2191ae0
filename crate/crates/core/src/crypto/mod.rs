//! Pairing-based primitives on BLS12-381: multi-message signatures with
//! blind issuance and proofs of knowledge, Pedersen commitments, range
//! proofs, and the Fiat–Shamir transcript they share.

pub mod bbs;
pub mod codec;
pub mod generators;
pub mod msm;
pub mod pedersen;
pub mod range;
pub mod spk;
pub mod transcript;

pub use bls12_381::Scalar;
