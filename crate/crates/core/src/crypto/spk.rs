//! Zero-knowledge proof of possession of a signature, with optional
//! disclosure and Pedersen commitments linked to hidden messages.
//!
//! The prover randomizes `A` into `A' = A·r1`, `Ā = A'·(−e) + B·r1` and
//! `d = B·r1 − h_0·r2`, then proves
//!
//! ```text
//! Ā − d           = A'·(−e) + h_0·r2
//! g1 + Σ_D h·m    = d·r3 − h_0·s' − Σ_H h·m        (r3 = 1/r1, s' = s − r2·r3)
//! C_j             = g·m_j + h·ρ_j                  for each linked index j
//! ```
//!
//! together with the pairing check `e(A', w) = e(Ā, g2)`.

use std::collections::BTreeMap;

use bls12_381::{G1Projective, Scalar};
use ff::Field;
use rand_core::CryptoRng;

use super::bbs::{pairing_check, random_nonzero, verify_signature, PublicKey, Signature};
use super::codec::{tag, Reader, Writer};
use super::generators::pedersen;
use super::msm;
use super::pedersen::{Opening, PedersenCommitment};
use super::transcript::Transcript;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub index: usize,
    pub commitment: PedersenCommitment,
    z_blind: Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignatureProof {
    message_count: usize,
    disclosed: BTreeMap<usize, Scalar>,
    a_prime: G1Projective,
    a_bar: G1Projective,
    d: G1Projective,
    challenge: Scalar,
    z_e: Scalar,
    z_r2: Scalar,
    z_r3: Scalar,
    z_s: Scalar,
    /// One response per hidden message, in index order.
    z_m: Vec<Scalar>,
    links: Vec<Link>,
}

/// Public shape of a proof: everything a verifier must know before reading
/// the randomized body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofShape {
    pub message_count: usize,
    pub disclosed: BTreeMap<usize, Scalar>,
    pub link_indices: Vec<usize>,
}

fn check_indices(l: usize, disclosed: &[usize], links: &[usize]) -> Result<()> {
    let mut seen = vec![false; l];
    for &i in disclosed {
        if i >= l {
            return Err(Error::BadIndex(i));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::BadIndex(i));
        }
    }
    let mut linked = vec![false; l];
    for &j in links {
        if j >= l || seen[j] {
            return Err(Error::BadIndex(j));
        }
        if std::mem::replace(&mut linked[j], true) {
            return Err(Error::BadIndex(j));
        }
    }
    Ok(())
}

fn begin(tr: &mut Transcript, pk: &PublicKey, shape: &ProofShape) {
    tr.absorb(b"issuer", &pk.fingerprint());
    tr.absorb_u64(b"L", shape.message_count as u64);
    tr.absorb_u64(b"disclosed", shape.disclosed.len() as u64);
    for (i, m) in &shape.disclosed {
        tr.absorb_u64(b"i", *i as u64);
        tr.absorb_scalar(b"m", m);
    }
    tr.absorb_u64(b"links", shape.link_indices.len() as u64);
    for j in &shape.link_indices {
        tr.absorb_u64(b"j", *j as u64);
    }
}

#[allow(clippy::too_many_arguments)]
fn finish_challenge(
    tr: &mut Transcript,
    a_prime: &G1Projective,
    a_bar: &G1Projective,
    d: &G1Projective,
    links: &[PedersenCommitment],
    t1: &G1Projective,
    t2: &G1Projective,
    t_links: &[G1Projective],
) -> Scalar {
    tr.absorb_point(b"A'", a_prime);
    tr.absorb_point(b"Abar", a_bar);
    tr.absorb_point(b"d", d);
    for c in links {
        tr.absorb_point(b"C", c.point());
    }
    tr.absorb_point(b"T1", t1);
    tr.absorb_point(b"T2", t2);
    for t in t_links {
        tr.absorb_point(b"Tc", t);
    }
    tr.challenge(b"spk")
}

/// Proves knowledge of `sig` over `messages`, hiding all of them, with
/// linking commitments for `link_indices`. The proof is bound to `context`.
pub fn spk_prove<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    sig: &Signature,
    messages: &[Scalar],
    link_indices: &[usize],
    context: &[u8],
    rng: &mut R,
) -> Result<(SignatureProof, Vec<Opening>)> {
    let mut tr = Transcript::new(b"spk");
    tr.absorb(b"context", context);
    spk_prove_in(&mut tr, pk, sig, messages, &[], link_indices, rng)
}

pub fn spk_verify(
    pk: &PublicKey,
    proof: &SignatureProof,
    context: &[u8],
) -> Option<Vec<PedersenCommitment>> {
    let mut tr = Transcript::new(b"spk");
    tr.absorb(b"context", context);
    spk_verify_in(&mut tr, pk, proof)
}

/// Transcript-threaded prover. Callers that compose further proofs keep using
/// `tr` afterwards so those proofs are bound to this one.
pub fn spk_prove_in<R: CryptoRng + ?Sized>(
    tr: &mut Transcript,
    pk: &PublicKey,
    sig: &Signature,
    messages: &[Scalar],
    disclosed: &[usize],
    link_indices: &[usize],
    rng: &mut R,
) -> Result<(SignatureProof, Vec<Opening>)> {
    let l = pk.message_count();
    if messages.len() != l {
        return Err(Error::LengthMismatch {
            expected: l,
            got: messages.len(),
        });
    }
    check_indices(l, disclosed, link_indices)?;
    if !verify_signature(pk, messages, sig) {
        return Err(Error::InvalidSignature);
    }
    let shape = ProofShape {
        message_count: l,
        disclosed: disclosed.iter().map(|&i| (i, messages[i])).collect(),
        link_indices: link_indices.to_vec(),
    };
    let hidden: Vec<usize> = (0..l)
        .filter(|i| !shape.disclosed.contains_key(i))
        .collect();

    let r1 = random_nonzero(rng);
    let r2 = Scalar::random(&mut *rng);
    let r3 = r1.invert().unwrap();
    let b = pk.message_base(messages, &sig.s);
    let a_prime = msm::mul(&sig.a, &r1);
    let b_r1 = msm::mul(&b, &r1);
    let a_bar = b_r1 - msm::mul(&a_prime, &sig.e);
    let d = b_r1 - pk.h(None).mul(&r2);
    let s_prime = sig.s - r2 * r3;

    let openings: Vec<Opening> = link_indices
        .iter()
        .map(|&j| Opening {
            value: messages[j],
            blind: Scalar::random(&mut *rng),
        })
        .collect();
    let commitments: Vec<PedersenCommitment> = openings.iter().map(Opening::commit).collect();

    let (b_e, b_r2, b_r3, b_s) = (
        Scalar::random(&mut *rng),
        Scalar::random(&mut *rng),
        Scalar::random(&mut *rng),
        Scalar::random(&mut *rng),
    );
    let b_m: BTreeMap<usize, Scalar> = hidden
        .iter()
        .map(|&i| (i, Scalar::random(&mut *rng)))
        .collect();
    let b_rho: Vec<Scalar> = link_indices
        .iter()
        .map(|_| Scalar::random(&mut *rng))
        .collect();

    let t1 = pk.h(None).mul(&b_r2) - msm::mul(&a_prime, &b_e);
    let mut t2 = msm::mul(&d, &b_r3) - pk.h(None).mul(&b_s);
    for (i, bm) in &b_m {
        t2 -= pk.h(Some(*i)).mul(bm);
    }
    let pg = pedersen();
    let t_links: Vec<G1Projective> = link_indices
        .iter()
        .zip(&b_rho)
        .map(|(j, br)| pg.g.mul(&b_m[j]) + pg.h.mul(br))
        .collect();

    begin(tr, pk, &shape);
    let c = finish_challenge(tr, &a_prime, &a_bar, &d, &commitments, &t1, &t2, &t_links);

    let links = link_indices
        .iter()
        .zip(&commitments)
        .zip(b_rho.iter().zip(&openings))
        .map(|((&index, &commitment), (br, op))| Link {
            index,
            commitment,
            z_blind: br + c * op.blind,
        })
        .collect();
    let proof = SignatureProof {
        message_count: l,
        disclosed: shape.disclosed,
        a_prime,
        a_bar,
        d,
        challenge: c,
        z_e: b_e + c * sig.e,
        z_r2: b_r2 + c * r2,
        z_r3: b_r3 + c * r3,
        z_s: b_s + c * s_prime,
        z_m: hidden.iter().map(|i| b_m[i] + c * messages[*i]).collect(),
        links,
    };
    Ok((proof, openings))
}

/// Returns the linking commitments on success.
pub fn spk_verify_in(
    tr: &mut Transcript,
    pk: &PublicKey,
    proof: &SignatureProof,
) -> Option<Vec<PedersenCommitment>> {
    let l = pk.message_count();
    if proof.message_count != l {
        return None;
    }
    let shape = proof.shape();
    let disclosed: Vec<usize> = shape.disclosed.keys().copied().collect();
    check_indices(l, &disclosed, &shape.link_indices).ok()?;
    let hidden: Vec<usize> = (0..l)
        .filter(|i| !proof.disclosed.contains_key(i))
        .collect();
    if hidden.len() != proof.z_m.len() || bool::from(proof.a_prime.is_identity()) {
        return None;
    }
    let c = proof.challenge;
    let h0 = pk.h(None);

    // T1 = h0·z_r2 − A'·z_e − c·(Ā − d)
    let t1 = h0.mul(&proof.z_r2)
        + msm::msm(&[proof.a_prime, proof.a_bar, proof.d], &[-proof.z_e, -c, c]);

    // T2 = d·z_r3 − h0·z_s − Σ_H h·z_m − c·(g1 + Σ_D h·m)
    let mut t2 =
        msm::mul(&proof.d, &proof.z_r3) - h0.mul(&proof.z_s) - super::bbs::g1_table().mul(&c);
    let z_by_index: BTreeMap<usize, Scalar> = hidden
        .iter()
        .copied()
        .zip(proof.z_m.iter().copied())
        .collect();
    for (i, z) in &z_by_index {
        t2 -= pk.h(Some(*i)).mul(z);
    }
    for (i, m) in &proof.disclosed {
        t2 -= pk.h(Some(*i)).mul(&(c * m));
    }

    let pg = pedersen();
    let t_links: Vec<G1Projective> = proof
        .links
        .iter()
        .map(|lk| {
            pg.g.mul(&z_by_index[&lk.index]) + pg.h.mul(&lk.z_blind)
                - msm::mul(lk.commitment.point(), &c)
        })
        .collect();
    let commitments: Vec<PedersenCommitment> = proof.links.iter().map(|lk| lk.commitment).collect();

    begin(tr, pk, &shape);
    let expect = finish_challenge(
        tr,
        &proof.a_prime,
        &proof.a_bar,
        &proof.d,
        &commitments,
        &t1,
        &t2,
        &t_links,
    );
    if expect != c {
        return None;
    }
    // e(A', w) = e(Ā, g2)  ⇔  e(A', w) · e(−Ā, g2) = 1
    if !pairing_check(pk.w(), &proof.a_prime, &-proof.a_bar) {
        return None;
    }
    Some(commitments)
}

impl SignatureProof {
    pub fn shape(&self) -> ProofShape {
        ProofShape {
            message_count: self.message_count,
            disclosed: self.disclosed.clone(),
            link_indices: self.links.iter().map(|l| l.index).collect(),
        }
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    /// Randomized group elements: `A'`, `Ā`, `d` and the linking commitments.
    pub fn points(&self) -> Vec<G1Projective> {
        let mut out = vec![self.a_prime, self.a_bar, self.d];
        out.extend(self.links.iter().map(|l| *l.commitment.point()));
        out
    }

    /// Swaps two linking commitments, leaving everything else intact.
    #[cfg(feature = "test-fixtures")]
    pub fn swap_link_commitments(&mut self, a: usize, b: usize) {
        let (ca, cb) = (self.links[a].commitment, self.links[b].commitment);
        self.links[a].commitment = cb;
        self.links[b].commitment = ca;
    }

    pub(crate) fn write_shape(shape: &ProofShape, w: &mut Writer) {
        w.u8(shape.message_count as u8);
        w.u8(shape.disclosed.len() as u8);
        for (i, m) in &shape.disclosed {
            w.u8(*i as u8).scalar(m);
        }
        w.u8(shape.link_indices.len() as u8);
        for j in &shape.link_indices {
            w.u8(*j as u8);
        }
    }

    pub(crate) fn read_shape(r: &mut Reader<'_>) -> Result<ProofShape> {
        let message_count = r.u8()? as usize;
        let nd = r.u8()? as usize;
        let mut disclosed = BTreeMap::new();
        for _ in 0..nd {
            let i = r.u8()? as usize;
            if disclosed.insert(i, r.scalar()?).is_some() {
                return Err(Error::Decode("duplicate disclosed index"));
            }
        }
        let nl = r.u8()? as usize;
        let link_indices = (0..nl)
            .map(|_| r.u8().map(usize::from))
            .collect::<Result<Vec<_>>>()?;
        let d: Vec<usize> = disclosed.keys().copied().collect();
        if message_count == 0 || message_count > super::bbs::MAX_MESSAGES {
            return Err(Error::Decode("message count"));
        }
        check_indices(message_count, &d, &link_indices)
            .map_err(|_| Error::Decode("proof indices"))?;
        Ok(ProofShape {
            message_count,
            disclosed,
            link_indices,
        })
    }

    /// Body layout: `A' Ā d c z_e z_r2 z_r3 z_s z_m* (C_j z_ρj)*`.
    pub(crate) fn write_body(&self, w: &mut Writer) {
        w.g1(&self.a_prime).g1(&self.a_bar).g1(&self.d);
        w.scalar(&self.challenge)
            .scalar(&self.z_e)
            .scalar(&self.z_r2)
            .scalar(&self.z_r3)
            .scalar(&self.z_s);
        for z in &self.z_m {
            w.scalar(z);
        }
        for lk in &self.links {
            w.g1(lk.commitment.point()).scalar(&lk.z_blind);
        }
    }

    pub(crate) fn read_body(r: &mut Reader<'_>, shape: ProofShape) -> Result<Self> {
        let (a_prime, a_bar, d) = (r.g1()?, r.g1()?, r.g1()?);
        let (challenge, z_e, z_r2, z_r3, z_s) = (
            r.scalar()?,
            r.scalar()?,
            r.scalar()?,
            r.scalar()?,
            r.scalar()?,
        );
        let hidden = shape.message_count - shape.disclosed.len();
        let z_m = (0..hidden)
            .map(|_| r.scalar())
            .collect::<Result<Vec<_>>>()?;
        let mut links = Vec::with_capacity(shape.link_indices.len());
        for &index in &shape.link_indices {
            links.push(Link {
                index,
                commitment: PedersenCommitment(r.g1()?),
                z_blind: r.scalar()?,
            });
        }
        Ok(Self {
            message_count: shape.message_count,
            disclosed: shape.disclosed,
            a_prime,
            a_bar,
            d,
            challenge,
            z_e,
            z_r2,
            z_r3,
            z_s,
            z_m,
            links,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::SPK);
        Self::write_shape(&self.shape(), &mut w);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::SPK)?;
        let shape = Self::read_shape(&mut r)?;
        let proof = Self::read_body(&mut r, shape)?;
        r.finish()?;
        Ok(proof)
    }
}
