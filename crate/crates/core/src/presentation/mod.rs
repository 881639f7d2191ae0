//! Unlinkable access presentations.
//!
//! A presentation proves possession of an issuer signature over
//! `(link_secret, iu_id, f_low, f_high)` with every attribute hidden, and
//! that the requested band lies inside `[f_low, f_high]`. The band check is
//! two non-negativity range proofs over commitment differences the verifier
//! computes itself:
//!
//! ```text
//! D_low  = commit(f_low_req, 0) − C_low   opens to (f_low_req − f_low,  −ρ_low)
//! D_high = C_high − commit(f_high_req, 0) opens to (f_high − f_high_req, ρ_high)
//! ```

mod request;

use bls12_381::Scalar;
use ff::Field;
use rand_core::CryptoRng;

use crate::credential::{Credential, F_HIGH, F_LOW, MESSAGE_COUNT};
use crate::crypto::bbs::PublicKey;
use crate::crypto::codec::{tag, Reader, Writer};
use crate::crypto::pedersen::{commit, PedersenCommitment};
use crate::crypto::range::{prove_range_in, verify_range_in, RangeProof};
use crate::crypto::spk::{spk_prove_in, spk_verify_in, SignatureProof};
use crate::crypto::transcript::Transcript;
use crate::error::{Error, Result};
use crate::nonce::Nonce;
use crate::par::{self, Execution};

pub use request::{presentation_context, AccessRequest, Location, TimeWindow};

/// Width of the gap range proofs; kHz values fit in 32 bits.
pub const GAP_BITS: usize = 32;
const LINKED: [usize; 2] = [F_LOW, F_HIGH];
const TRANSCRIPT_DOMAIN: &[u8] = b"iuguard-presentation-v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Presentation {
    issuer_fp: [u8; 32],
    spk: SignatureProof,
    range_low: RangeProof,
    range_high: RangeProof,
    context_digest: [u8; 32],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectReason {
    ContextMismatch,
    SignatureProofInvalid,
    RangeLowInvalid,
    RangeHighInvalid,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ContextMismatch => "context-mismatch",
            Self::SignatureProofInvalid => "signature-proof-invalid",
            Self::RangeLowInvalid => "range-low-invalid",
            Self::RangeHighInvalid => "range-high-invalid",
        }
    }
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Accepted,
    Rejected(RejectReason),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted)
    }
}

fn transcript(digest: &[u8; 32]) -> Transcript {
    let mut tr = Transcript::new(TRANSCRIPT_DOMAIN);
    tr.absorb(b"context", digest);
    tr
}

fn public_commit(v: u32) -> PedersenCommitment {
    commit(&Scalar::from(v as u64), &Scalar::ZERO)
}

/// Checks the band predicate locally; nothing is sent when it fails.
pub fn derive_presentation<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    cred: &Credential,
    req: &AccessRequest,
    nonce: &Nonce,
    rng: &mut R,
) -> Result<Presentation> {
    req.validate()?;
    if !cred.band().contains(&req.band()) {
        return Err(Error::OutOfAuthorization);
    }
    let band = cred.band();
    derive_inner(pk, cred, req, nonce, rng, |tr, blinds, rng| {
        let low = prove_range_in(
            tr,
            (req.f_low_req_khz - band.f_low_khz) as i64,
            &blinds.0,
            GAP_BITS,
            rng,
        )?;
        let high = prove_range_in(
            tr,
            (band.f_high_khz - req.f_high_req_khz) as i64,
            &blinds.1,
            GAP_BITS,
            rng,
        )?;
        Ok((low.1, high.1))
    })
}

/// Prover that skips the band predicate and range checks, proving whatever
/// field elements the differences happen to be. For soundness tests only.
#[cfg(feature = "test-fixtures")]
pub fn derive_presentation_unchecked<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    cred: &Credential,
    req: &AccessRequest,
    nonce: &Nonce,
    rng: &mut R,
) -> Result<Presentation> {
    use crate::crypto::range::prove_range_unchecked;
    let band = cred.band();
    let d_low = Scalar::from(req.f_low_req_khz as u64) - Scalar::from(band.f_low_khz as u64);
    let d_high = Scalar::from(band.f_high_khz as u64) - Scalar::from(req.f_high_req_khz as u64);
    derive_inner(pk, cred, req, nonce, rng, |tr, blinds, rng| {
        let low = prove_range_unchecked(tr, &d_low, &blinds.0, GAP_BITS, rng);
        let high = prove_range_unchecked(tr, &d_high, &blinds.1, GAP_BITS, rng);
        Ok((low.1, high.1))
    })
}

type RangePair = (RangeProof, RangeProof);

fn derive_inner<R, F>(
    pk: &PublicKey,
    cred: &Credential,
    req: &AccessRequest,
    nonce: &Nonce,
    rng: &mut R,
    prove_ranges: F,
) -> Result<Presentation>
where
    R: CryptoRng + ?Sized,
    F: FnOnce(&mut Transcript, (Scalar, Scalar), &mut R) -> Result<RangePair>,
{
    if pk.fingerprint() != cred.issuer_fingerprint() || pk.message_count() != MESSAGE_COUNT {
        return Err(Error::Schema(
            "credential was not issued under this key".into(),
        ));
    }
    let issuer_fp = pk.fingerprint();
    let context_digest = presentation_context(req, nonce, &issuer_fp);
    let mut tr = transcript(&context_digest);
    let (spk, openings) = spk_prove_in(
        &mut tr,
        pk,
        cred.signature(),
        &cred.messages(),
        &[],
        &LINKED,
        rng,
    )?;
    let blinds = (-openings[0].blind, openings[1].blind);
    let (range_low, range_high) = prove_ranges(&mut tr, blinds, rng)?;
    Ok(Presentation {
        issuer_fp,
        spk,
        range_low,
        range_high,
        context_digest,
    })
}

pub fn verify_presentation(
    pk: &PublicKey,
    pres: &Presentation,
    req: &AccessRequest,
    nonce: &Nonce,
) -> Verdict {
    match check(pk, pres, req, nonce) {
        Ok(()) => Verdict::Accepted,
        Err(r) => Verdict::Rejected(r),
    }
}

fn check(
    pk: &PublicKey,
    pres: &Presentation,
    req: &AccessRequest,
    nonce: &Nonce,
) -> std::result::Result<(), RejectReason> {
    let digest = presentation_context(req, nonce, &pres.issuer_fp);
    if digest != pres.context_digest || req.validate().is_err() {
        return Err(RejectReason::ContextMismatch);
    }
    if pres.issuer_fp != pk.fingerprint() {
        return Err(RejectReason::SignatureProofInvalid);
    }
    let links: Vec<usize> = pres.spk.links().iter().map(|l| l.index).collect();
    if links != LINKED {
        return Err(RejectReason::SignatureProofInvalid);
    }
    let mut tr = transcript(&digest);
    let cs = spk_verify_in(&mut tr, pk, &pres.spk).ok_or(RejectReason::SignatureProofInvalid)?;
    let d_low = public_commit(req.f_low_req_khz) - cs[0];
    if !verify_range_in(&mut tr, &d_low, &pres.range_low, GAP_BITS) {
        return Err(RejectReason::RangeLowInvalid);
    }
    let d_high = cs[1] - public_commit(req.f_high_req_khz);
    if !verify_range_in(&mut tr, &d_high, &pres.range_high, GAP_BITS) {
        return Err(RejectReason::RangeHighInvalid);
    }
    Ok(())
}

/// Verifies many presentations against one key, in parallel when requested.
pub fn verify_batch(
    exec: Execution,
    pk: &PublicKey,
    items: &[(Presentation, AccessRequest, Nonce)],
) -> Vec<Verdict> {
    par::map(exec, items, |(p, r, n)| verify_presentation(pk, p, r, n))
}

impl Presentation {
    pub fn issuer_fingerprint(&self) -> [u8; 32] {
        self.issuer_fp
    }

    pub fn context_digest(&self) -> [u8; 32] {
        self.context_digest
    }

    pub fn signature_proof(&self) -> &SignatureProof {
        &self.spk
    }

    /// `(C_low, C_high)` as carried in the signature proof.
    pub fn linking_commitments(&self) -> (PedersenCommitment, PedersenCommitment) {
        let l = self.spk.links();
        (l[0].commitment, l[1].commitment)
    }

    /// Every serialized group element.
    pub fn points(&self) -> Vec<bls12_381::G1Projective> {
        let mut out = self.spk.points();
        out.extend(self.range_low.points());
        out.extend(self.range_high.points());
        out
    }

    /// Length of the public prefix (format tag, issuer fingerprint, proof
    /// shape and range widths). Everything after it is randomized.
    pub fn header_len(&self) -> usize {
        let mut w = Writer::new();
        self.write_header(&mut w);
        w.len()
    }

    fn write_header(&self, w: &mut Writer) {
        w.u16(tag::PRESENTATION).raw(&self.issuer_fp);
        SignatureProof::write_shape(&self.spk.shape(), w);
        w.u8(self.range_low.bits() as u8)
            .u8(self.range_high.bits() as u8);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write_header(&mut w);
        self.spk.write_body(&mut w);
        self.range_low.write_body(&mut w);
        self.range_high.write_body(&mut w);
        w.raw(&self.context_digest);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::PRESENTATION)?;
        let issuer_fp = r.array::<32>()?;
        let shape = SignatureProof::read_shape(&mut r)?;
        let (low_bits, high_bits) = (r.u8()? as usize, r.u8()? as usize);
        let spk = SignatureProof::read_body(&mut r, shape)?;
        let range_low = RangeProof::read_body(&mut r, low_bits)?;
        let range_high = RangeProof::read_body(&mut r, high_bits)?;
        let context_digest = r.array::<32>()?;
        r.finish()?;
        Ok(Self {
            issuer_fp,
            spk,
            range_low,
            range_high,
            context_digest,
        })
    }

    /// Swaps `C_low` and `C_high` inside the proof. Adversarial test hook.
    #[cfg(feature = "test-fixtures")]
    pub fn swap_linking_commitments(&mut self) {
        self.spk.swap_link_commitments(0, 1);
    }

    /// Replaces the range proofs with those of `other`. Adversarial test hook.
    #[cfg(feature = "test-fixtures")]
    pub fn graft_ranges_from(&mut self, other: &Presentation) {
        self.range_low = other.range_low.clone();
        self.range_high = other.range_high.clone();
    }
}

pub fn serialize_presentation(p: &Presentation) -> Vec<u8> {
    p.to_bytes()
}

pub fn deserialize_presentation(bytes: &[u8]) -> Result<Presentation> {
    Presentation::from_bytes(bytes)
}
