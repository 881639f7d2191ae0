//! Multi-message signatures over BLS12-381 (BBS+ form) with blind issuance
//! of the link-secret slot.
//!
//! A signature on `m_0..m_{L-1}` is `(A, e, s)` with
//! `A = (g1 · h_0^s · Π h_{i+1}^{m_i})^{1/(x+e)}`; the verifier checks
//! `e(A, w · g2^e) = e(B, g2)` where `B` is the bracketed product.

use std::sync::Arc;

use bls12_381::{multi_miller_loop, G1Projective, G2Affine, G2Prepared, G2Projective, Gt, Scalar};
use ff::Field;
use group::Curve;
use rand_core::CryptoRng;
use sha2::{Digest, Sha256, Sha512};

use super::codec::{tag, Reader, Writer};
use super::generators::hash_to_g1;
use super::msm::{self, FixedBase};
use super::transcript::Transcript;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

pub const MAX_MESSAGES: usize = 64;
pub const GENERATOR_DST: &[u8] = b"IUGUARD-V01-CS01-with-BLS12381G1_XMD:SHA-256_SSWU_RO_BBS_GENS_";
/// Message slot that is committed blindly during issuance.
pub const LINK_SECRET_INDEX: usize = 0;

pub(crate) fn g1_table() -> &'static FixedBase {
    static T: std::sync::OnceLock<FixedBase> = std::sync::OnceLock::new();
    T.get_or_init(|| FixedBase::new(G1Projective::generator()))
}

pub(crate) fn random_nonzero<R: CryptoRng + ?Sized>(rng: &mut R) -> Scalar {
    loop {
        let s = Scalar::random(&mut *rng);
        if !bool::from(s.is_zero()) {
            return s;
        }
    }
}

struct KeyTables {
    /// `h_0` (signature blinding) followed by one generator per message.
    h: Vec<FixedBase>,
}

/// Issuer public key with its derived message generators.
#[derive(Clone)]
pub struct PublicKey {
    w: G2Affine,
    message_count: usize,
    fingerprint: [u8; 32],
    tables: Arc<KeyTables>,
}

impl std::fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PublicKey")
            .field("message_count", &self.message_count)
            .field("fingerprint", &hex::encode(self.fingerprint))
            .finish()
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.w == other.w && self.message_count == other.message_count
    }
}

impl Eq for PublicKey {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignerKeyPair {
    sk: Scalar,
    pk: PublicKey,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature {
    pub a: G1Projective,
    pub e: Scalar,
    pub s: Scalar,
}

fn check_message_count(l: usize) -> Result<()> {
    if l == 0 || l > MAX_MESSAGES {
        return Err(Error::Schema(format!(
            "message count {l} outside 1..={MAX_MESSAGES}"
        )));
    }
    Ok(())
}

/// Derives `h_0..h_L` from the public key; depends only on `(w, L)`.
pub fn derive_generators(w: &G2Affine, message_count: usize) -> Vec<G1Projective> {
    let pk_bytes = w.to_compressed();
    (0..=message_count as u32)
        .map(|i| {
            let mut msg = Vec::with_capacity(104);
            msg.extend_from_slice(&pk_bytes);
            msg.extend_from_slice(&(message_count as u32).to_be_bytes());
            msg.extend_from_slice(&i.to_be_bytes());
            hash_to_g1(GENERATOR_DST, &msg)
        })
        .collect()
}

impl PublicKey {
    pub fn new(w: G2Affine, message_count: usize) -> Result<Self> {
        check_message_count(message_count)?;
        if bool::from(w.is_identity()) {
            return Err(Error::Decode("identity public key"));
        }
        let gens = derive_generators(&w, message_count);
        let h = msm::fixed_bases(Execution::default(), &gens);
        let mut hasher = Sha256::new();
        hasher.update(b"iuguard-issuer-fp-v1");
        hasher.update(w.to_compressed());
        hasher.update((message_count as u32).to_be_bytes());
        Ok(Self {
            w,
            message_count,
            fingerprint: hasher.finalize().into(),
            tables: Arc::new(KeyTables { h }),
        })
    }

    pub fn message_count(&self) -> usize {
        self.message_count
    }

    pub fn w(&self) -> &G2Affine {
        &self.w
    }

    /// Stable 32-byte identifier of this key.
    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    /// `h_0` for `index = None`, else the generator of message `index`.
    pub(crate) fn h(&self, index: Option<usize>) -> &FixedBase {
        match index {
            None => &self.tables.h[0],
            Some(i) => &self.tables.h[i + 1],
        }
    }

    pub fn generators(&self) -> Vec<G1Projective> {
        self.tables.h.iter().map(|t| *t.base()).collect()
    }

    /// `g1 · h_0^s · Π h_{i+1}^{m_i}`
    pub(crate) fn message_base(&self, messages: &[Scalar], s: &Scalar) -> G1Projective {
        let terms: Vec<(usize, &Scalar)> = messages.iter().enumerate().collect();
        let parts = par::map(Execution::default(), &terms, |(i, m)| {
            self.h(Some(*i)).mul(m)
        });
        G1Projective::generator() + self.h(None).mul(s) + parts.into_iter().sum::<G1Projective>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::PUBLIC_KEY);
        w.u8(self.message_count as u8).g2(&self.w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::PUBLIC_KEY)?;
        let l = r.u8()? as usize;
        let w = r.g2()?;
        r.finish()?;
        Self::new(w, l)
    }
}

/// Deterministic key generation from a 32-byte seed.
pub fn keygen(seed: &[u8; 32], message_count: usize) -> Result<SignerKeyPair> {
    check_message_count(message_count)?;
    let mut counter = 0u32;
    let sk = loop {
        let mut h = Sha512::new();
        h.update(b"iuguard-bbs-keygen-v1");
        h.update(seed);
        h.update(counter.to_be_bytes());
        let wide: [u8; 64] = h.finalize().into();
        let sk = Scalar::from_bytes_wide(&wide);
        if !bool::from(sk.is_zero()) {
            break sk;
        }
        counter += 1;
    };
    let w = (G2Projective::generator() * sk).to_affine();
    Ok(SignerKeyPair {
        sk,
        pk: PublicKey::new(w, message_count)?,
    })
}

impl SignerKeyPair {
    pub fn public_key(&self) -> &PublicKey {
        &self.pk
    }

    fn finish(&self, base: G1Projective, e: Scalar, s: Scalar) -> Result<Signature> {
        let inv = Option::<Scalar>::from((self.sk + e).invert()).ok_or(Error::InvalidSignature)?;
        Ok(Signature {
            a: msm::mul(&base, &inv),
            e,
            s,
        })
    }
}

pub fn sign<R: CryptoRng + ?Sized>(
    kp: &SignerKeyPair,
    messages: &[Scalar],
    rng: &mut R,
) -> Result<Signature> {
    let e = random_nonzero(rng);
    let s = Scalar::random(&mut *rng);
    sign_with_randomness(kp, messages, e, s)
}

/// Signs with caller-chosen `(e, s)`. Exposed only for cross-implementation
/// fixture vectors.
#[cfg(feature = "test-fixtures")]
pub fn sign_fixed(
    kp: &SignerKeyPair,
    messages: &[Scalar],
    e: Scalar,
    s: Scalar,
) -> Result<Signature> {
    sign_with_randomness(kp, messages, e, s)
}

fn sign_with_randomness(
    kp: &SignerKeyPair,
    messages: &[Scalar],
    e: Scalar,
    s: Scalar,
) -> Result<Signature> {
    if messages.len() != kp.pk.message_count {
        return Err(Error::LengthMismatch {
            expected: kp.pk.message_count,
            got: messages.len(),
        });
    }
    kp.finish(kp.pk.message_base(messages, &s), e, s)
}

/// `e(A, w) · e(A^e − B, g2) == 1`, i.e. `e(A, w·g2^e) = e(B, g2)`.
pub(crate) fn pairing_check(w: &G2Affine, a: &G1Projective, rhs: &G1Projective) -> bool {
    let pairs = [a.to_affine(), rhs.to_affine()];
    let w_prep = G2Prepared::from(*w);
    let g2_prep = G2Prepared::from(G2Affine::generator());
    multi_miller_loop(&[(&pairs[0], &w_prep), (&pairs[1], &g2_prep)]).final_exponentiation()
        == Gt::identity()
}

pub fn verify_signature(pk: &PublicKey, messages: &[Scalar], sig: &Signature) -> bool {
    if messages.len() != pk.message_count || bool::from(sig.a.is_identity()) {
        return false;
    }
    let b = pk.message_base(messages, &sig.s);
    pairing_check(&pk.w, &sig.a, &(msm::mul(&sig.a, &sig.e) - b))
}

impl Signature {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::SIGNATURE);
        w.g1(&self.a).scalar(&self.e).scalar(&self.s);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::SIGNATURE)?;
        let sig = Self::read(&mut r)?;
        r.finish()?;
        Ok(sig)
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        Ok(Self {
            a: r.g1()?,
            e: r.scalar()?,
            s: r.scalar()?,
        })
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.g1(&self.a).scalar(&self.e).scalar(&self.s);
    }
}

/// Holder-side commitment to the link secret, `C = h_1^ls · h_0^s'`, with a
/// Schnorr proof of knowledge of its opening bound to an issuer nonce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlindCommitment {
    pub commitment: G1Projective,
    pub proof: BlindingProof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlindingProof {
    challenge: Scalar,
    z_secret: Scalar,
    z_blind: Scalar,
}

/// What the holder keeps to unblind the issuer's response.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Blinding(pub Scalar);

fn blinding_transcript(pk: &PublicKey, nonce: &[u8], c: &G1Projective, t: &G1Projective) -> Scalar {
    let mut tr = Transcript::new(b"blind-issuance");
    tr.absorb(b"issuer", &pk.fingerprint);
    tr.absorb(b"nonce", nonce);
    tr.absorb_point(b"C", c);
    tr.absorb_point(b"T", t);
    tr.challenge(b"c")
}

pub fn commit_link_secret<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    link_secret: &Scalar,
    nonce: &[u8],
    rng: &mut R,
) -> (BlindCommitment, Blinding) {
    let h_ls = pk.h(Some(LINK_SECRET_INDEX));
    let h0 = pk.h(None);
    let blind = Scalar::random(&mut *rng);
    let commitment = h_ls.mul(link_secret) + h0.mul(&blind);
    let (r_ls, r_b) = (Scalar::random(&mut *rng), Scalar::random(&mut *rng));
    let t = h_ls.mul(&r_ls) + h0.mul(&r_b);
    let challenge = blinding_transcript(pk, nonce, &commitment, &t);
    (
        BlindCommitment {
            commitment,
            proof: BlindingProof {
                challenge,
                z_secret: r_ls + challenge * link_secret,
                z_blind: r_b + challenge * blind,
            },
        },
        Blinding(blind),
    )
}

impl BlindCommitment {
    pub fn verify(&self, pk: &PublicKey, nonce: &[u8]) -> bool {
        let p = &self.proof;
        let t = pk.h(Some(LINK_SECRET_INDEX)).mul(&p.z_secret) + pk.h(None).mul(&p.z_blind)
            - msm::mul(&self.commitment, &p.challenge);
        blinding_transcript(pk, nonce, &self.commitment, &t) == p.challenge
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::BLINDING_PROOF);
        w.g1(&self.commitment)
            .scalar(&self.proof.challenge)
            .scalar(&self.proof.z_secret)
            .scalar(&self.proof.z_blind);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::BLINDING_PROOF)?;
        let out = Self {
            commitment: r.g1()?,
            proof: BlindingProof {
                challenge: r.scalar()?,
                z_secret: r.scalar()?,
                z_blind: r.scalar()?,
            },
        };
        r.finish()?;
        Ok(out)
    }
}

/// Issuer side of blind issuance. `known` must cover every slot except the
/// link secret, each exactly once.
pub fn blind_sign<R: CryptoRng + ?Sized>(
    kp: &SignerKeyPair,
    hidden: &BlindCommitment,
    nonce: &[u8],
    known: &[(usize, Scalar)],
    rng: &mut R,
) -> Result<Signature> {
    let l = kp.pk.message_count;
    let mut seen = vec![false; l];
    seen[LINK_SECRET_INDEX] = true;
    for (i, _) in known {
        if *i >= l {
            return Err(Error::BadIndex(*i));
        }
        if seen[*i] {
            return Err(Error::Schema(format!("message index {i} supplied twice")));
        }
        seen[*i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Schema("known messages leave a gap".into()));
    }
    if !hidden.verify(&kp.pk, nonce) {
        return Err(Error::ProofOfKnowledge);
    }
    let e = random_nonzero(rng);
    let s = Scalar::random(&mut *rng);
    let mut base = G1Projective::generator() + hidden.commitment + kp.pk.h(None).mul(&s);
    for (i, m) in known {
        base += kp.pk.h(Some(*i)).mul(m);
    }
    kp.finish(base, e, s)
}

/// Holder side: folds the commitment blinding into `s`.
pub fn unblind(sig: &Signature, blinding: &Blinding) -> Signature {
    Signature {
        a: sig.a,
        e: sig.e,
        s: sig.s + blinding.0,
    }
}
