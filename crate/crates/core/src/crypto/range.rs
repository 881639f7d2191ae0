//! Logarithmic-size range proofs (inner-product argument) for statements
//! "the commitment `V = g^v h^γ` opens to some `v ∈ [0, 2^n)`".
//!
//! The inner-product generators are folded implicitly: the prover tracks a
//! weight per original generator instead of materializing the halved
//! vectors, so every multiplication stays on a precomputed fixed base.

use bls12_381::{G1Projective, Scalar};
use ff::Field;
use rand_core::CryptoRng;

use super::codec::{tag, Reader, Writer};
use super::generators::{pedersen, range_gens};
use super::msm::{self, FixedBase};
use super::pedersen::{commit, PedersenCommitment};
use super::transcript::Transcript;
use crate::error::{Error, Result};

pub const SUPPORTED_WIDTHS: [usize; 3] = [8, 16, 32];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RangeProof {
    bits: usize,
    a: G1Projective,
    s: G1Projective,
    t1: G1Projective,
    t2: G1Projective,
    t_hat: Scalar,
    tau_x: Scalar,
    mu: Scalar,
    l_vec: Vec<G1Projective>,
    r_vec: Vec<G1Projective>,
    a_final: Scalar,
    b_final: Scalar,
}

fn check_width(bits: usize) -> Result<()> {
    if SUPPORTED_WIDTHS.contains(&bits) {
        Ok(())
    } else {
        Err(Error::UnsupportedWidth(bits))
    }
}

fn rounds(bits: usize) -> usize {
    bits.trailing_zeros() as usize
}

/// Proves `0 ≤ v < 2^bits` under a fresh transcript.
pub fn prove_range<R: CryptoRng + ?Sized>(
    v: i64,
    blind: &Scalar,
    bits: usize,
    rng: &mut R,
) -> Result<(PedersenCommitment, RangeProof)> {
    let mut t = Transcript::new(b"range-proof");
    prove_range_in(&mut t, v, blind, bits, rng)
}

pub fn verify_range(c: &PedersenCommitment, proof: &RangeProof, bits: usize) -> bool {
    let mut t = Transcript::new(b"range-proof");
    verify_range_in(&mut t, c, proof, bits)
}

/// Like [`prove_range`] but continues an existing transcript, binding the
/// proof to whatever the caller absorbed first.
pub fn prove_range_in<R: CryptoRng + ?Sized>(
    transcript: &mut Transcript,
    v: i64,
    blind: &Scalar,
    bits: usize,
    rng: &mut R,
) -> Result<(PedersenCommitment, RangeProof)> {
    check_width(bits)?;
    if v < 0 || (v as u64) >> bits != 0 {
        return Err(Error::OutOfRange { bits });
    }
    Ok(prove_unchecked(
        transcript,
        &Scalar::from(v as u64),
        blind,
        bits,
        rng,
    ))
}

/// Runs the prover on an arbitrary field element, using its low `bits`
/// bits as the claimed decomposition. Only useful for soundness tests:
/// the result verifies only when the value truly is in range.
#[cfg(feature = "test-fixtures")]
pub fn prove_range_unchecked<R: CryptoRng + ?Sized>(
    transcript: &mut Transcript,
    value: &Scalar,
    blind: &Scalar,
    bits: usize,
    rng: &mut R,
) -> (PedersenCommitment, RangeProof) {
    prove_unchecked(transcript, value, blind, bits, rng)
}

fn powers(x: &Scalar, n: usize) -> Vec<Scalar> {
    let mut out = Vec::with_capacity(n);
    let mut acc = Scalar::ONE;
    for _ in 0..n {
        out.push(acc);
        acc *= x;
    }
    out
}

fn inner(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn absorb_statement(t: &mut Transcript, bits: usize, v: &G1Projective) {
    t.absorb_u64(b"range-bits", bits as u64);
    t.absorb_point(b"V", v);
}

fn prove_unchecked<R: CryptoRng + ?Sized>(
    transcript: &mut Transcript,
    value: &Scalar,
    gamma: &Scalar,
    n: usize,
    rng: &mut R,
) -> (PedersenCommitment, RangeProof) {
    let pg = pedersen();
    let gens = range_gens();
    let (g_vec, h_vec) = (&gens.g_vec[..n], &gens.h_vec[..n]);

    let v_commit = commit(value, gamma);
    absorb_statement(transcript, n, &v_commit.0);

    let le = value.to_bytes();
    let a_l: Vec<Scalar> = (0..n)
        .map(|i| Scalar::from(((le[i / 8] >> (i % 8)) & 1) as u64))
        .collect();
    let a_r: Vec<Scalar> = a_l.iter().map(|b| b - Scalar::ONE).collect();

    let alpha = Scalar::random(&mut *rng);
    let mut a = pg.h.mul(&alpha);
    for i in 0..n {
        if bool::from(a_l[i].is_zero()) {
            a -= h_vec[i].base();
        } else {
            a += g_vec[i].base();
        }
    }

    let s_l: Vec<Scalar> = (0..n).map(|_| Scalar::random(&mut *rng)).collect();
    let s_r: Vec<Scalar> = (0..n).map(|_| Scalar::random(&mut *rng)).collect();
    let rho = Scalar::random(&mut *rng);
    let mut s = pg.h.mul(&rho);
    for i in 0..n {
        s += g_vec[i].mul(&s_l[i]) + h_vec[i].mul(&s_r[i]);
    }

    transcript.absorb_point(b"A", &a);
    transcript.absorb_point(b"S", &s);
    let y = transcript.challenge(b"y");
    let z = transcript.challenge(b"z");
    let z2 = z.square();

    let y_pow = powers(&y, n);
    let two_pow = powers(&Scalar::from(2u64), n);
    let l0: Vec<Scalar> = a_l.iter().map(|b| b - z).collect();
    let l1 = s_l;
    let r0: Vec<Scalar> = (0..n)
        .map(|i| y_pow[i] * (a_r[i] + z) + z2 * two_pow[i])
        .collect();
    let r1: Vec<Scalar> = (0..n).map(|i| y_pow[i] * s_r[i]).collect();

    let t1 = inner(&l0, &r1) + inner(&l1, &r0);
    let t2 = inner(&l1, &r1);
    let tau1 = Scalar::random(&mut *rng);
    let tau2 = Scalar::random(&mut *rng);
    let t1_commit = pg.g.mul(&t1) + pg.h.mul(&tau1);
    let t2_commit = pg.g.mul(&t2) + pg.h.mul(&tau2);

    transcript.absorb_point(b"T1", &t1_commit);
    transcript.absorb_point(b"T2", &t2_commit);
    let x = transcript.challenge(b"x");

    let l: Vec<Scalar> = (0..n).map(|i| l0[i] + l1[i] * x).collect();
    let r: Vec<Scalar> = (0..n).map(|i| r0[i] + r1[i] * x).collect();
    let t_hat = inner(&l, &r);
    let tau_x = tau2 * x.square() + tau1 * x + z2 * gamma;
    let mu = alpha + rho * x;

    transcript.absorb_scalar(b"t_hat", &t_hat);
    transcript.absorb_scalar(b"tau_x", &tau_x);
    transcript.absorb_scalar(b"mu", &mu);
    let w = transcript.challenge(b"w");

    let y_inv = y.invert().unwrap_or(Scalar::ZERO);
    let h_weights = powers(&y_inv, n);
    let (l_vec, r_vec, a_final, b_final) =
        inner_product_prove(transcript, g_vec, h_vec, &pg.g, &w, h_weights, l, r);

    (
        v_commit,
        RangeProof {
            bits: n,
            a,
            s,
            t1: t1_commit,
            t2: t2_commit,
            t_hat,
            tau_x,
            mu,
            l_vec,
            r_vec,
            a_final,
            b_final,
        },
    )
}

#[allow(clippy::too_many_arguments)]
fn inner_product_prove(
    transcript: &mut Transcript,
    g_vec: &[FixedBase],
    h_vec: &[FixedBase],
    g: &FixedBase,
    w: &Scalar,
    mut h_weights: Vec<Scalar>,
    mut a: Vec<Scalar>,
    mut b: Vec<Scalar>,
) -> (Vec<G1Projective>, Vec<G1Projective>, Scalar, Scalar) {
    let n = g_vec.len();
    let mut g_weights = vec![Scalar::ONE; n];
    let mut l_vec = Vec::new();
    let mut r_vec = Vec::new();
    let mut m = n;
    while m > 1 {
        let half = m / 2;
        let (a_lo, a_hi) = a.split_at(half);
        let (b_lo, b_hi) = b.split_at(half);
        let c_l = inner(a_lo, b_hi);
        let c_r = inner(a_hi, b_lo);

        // Original generator i currently sits at folded index i mod m.
        let mut l = g.mul(&(c_l * w));
        let mut r = g.mul(&(c_r * w));
        for i in 0..n {
            let k = i % m;
            if k >= half {
                l += g_vec[i].mul(&(a_lo[k - half] * g_weights[i]));
                r += h_vec[i].mul(&(b_lo[k - half] * h_weights[i]));
            } else {
                l += h_vec[i].mul(&(b_hi[k] * h_weights[i]));
                r += g_vec[i].mul(&(a_hi[k] * g_weights[i]));
            }
        }
        transcript.absorb_point(b"L", &l);
        transcript.absorb_point(b"R", &r);
        let u = transcript.challenge(b"u");
        let u_inv = u.invert().unwrap_or(Scalar::ZERO);

        for i in 0..n {
            if i % m < half {
                g_weights[i] *= u_inv;
                h_weights[i] *= u;
            } else {
                g_weights[i] *= u;
                h_weights[i] *= u_inv;
            }
        }
        a = (0..half).map(|k| a_lo[k] * u + a_hi[k] * u_inv).collect();
        b = (0..half).map(|k| b_lo[k] * u_inv + b_hi[k] * u).collect();
        l_vec.push(l);
        r_vec.push(r);
        m = half;
    }
    (l_vec, r_vec, a[0], b[0])
}

/// Continues `transcript` and checks the proof against `c`.
pub fn verify_range_in(
    transcript: &mut Transcript,
    c: &PedersenCommitment,
    proof: &RangeProof,
    bits: usize,
) -> bool {
    if check_width(bits).is_err() || proof.bits != bits {
        return false;
    }
    let k = rounds(bits);
    if proof.l_vec.len() != k || proof.r_vec.len() != k {
        return false;
    }
    let n = bits;
    let pg = pedersen();
    let gens = range_gens();

    absorb_statement(transcript, n, &c.0);
    transcript.absorb_point(b"A", &proof.a);
    transcript.absorb_point(b"S", &proof.s);
    let y = transcript.challenge(b"y");
    let z = transcript.challenge(b"z");
    transcript.absorb_point(b"T1", &proof.t1);
    transcript.absorb_point(b"T2", &proof.t2);
    let x = transcript.challenge(b"x");
    transcript.absorb_scalar(b"t_hat", &proof.t_hat);
    transcript.absorb_scalar(b"tau_x", &proof.tau_x);
    transcript.absorb_scalar(b"mu", &proof.mu);
    let w = transcript.challenge(b"w");
    let mut u = Vec::with_capacity(k);
    for (l, r) in proof.l_vec.iter().zip(&proof.r_vec) {
        transcript.absorb_point(b"L", l);
        transcript.absorb_point(b"R", r);
        u.push(transcript.challenge(b"u"));
    }

    let Some(y_inv) = Option::<Scalar>::from(y.invert()) else {
        return false;
    };
    let mut u_inv = Vec::with_capacity(k);
    for ui in &u {
        match Option::<Scalar>::from(ui.invert()) {
            Some(v) => u_inv.push(v),
            None => return false,
        }
    }

    let z2 = z.square();
    let z3 = z2 * z;
    let y_pow = powers(&y, n);
    let y_inv_pow = powers(&y_inv, n);
    let two_pow = powers(&Scalar::from(2u64), n);
    let sum_y: Scalar = y_pow.iter().sum();
    let sum_2: Scalar = two_pow.iter().sum();
    let delta = (z - z2) * sum_y - z3 * sum_2;

    // g^(t̂ − δ) · h^τx = V^z² · T1^x · T2^x²
    let lhs = pg.g.mul(&(proof.t_hat - delta)) + pg.h.mul(&proof.tau_x);
    let rhs = msm::msm(&[c.0, proof.t1, proof.t2], &[z2, x, x.square()]);
    if lhs != rhs {
        return false;
    }

    // Per-generator folding factors s_i = Π_j u_j^(±1).
    let mut s = vec![Scalar::ONE; n];
    for (j, (uj, uj_inv)) in u.iter().zip(&u_inv).enumerate() {
        let m = n >> j;
        let half = m / 2;
        for (i, si) in s.iter_mut().enumerate() {
            *si *= if i % m < half { uj_inv } else { uj };
        }
    }

    // A + x·S − z·ΣG + Σ(z + z²2ⁱy⁻ⁱ)·H − μ·h + (t̂ − ab)·w·g + Σ(u²L + u⁻²R)
    //   − a·Σ sᵢ Gᵢ − b·Σ sᵢ⁻¹ y⁻ⁱ Hᵢ = 0
    let ab = proof.a_final * proof.b_final;
    let mut fixed = pg.g.mul(&((proof.t_hat - ab) * w)) - pg.h.mul(&proof.mu);
    for i in 0..n {
        // s_i⁻¹ is the product of the opposite factors.
        let s_inv = s[i].invert().unwrap_or(Scalar::ZERO);
        let g_coeff = -z - proof.a_final * s[i];
        let h_coeff = z + z2 * two_pow[i] * y_inv_pow[i] - proof.b_final * s_inv * y_inv_pow[i];
        fixed += gens.g_vec[i].mul(&g_coeff) + gens.h_vec[i].mul(&h_coeff);
    }

    let mut points = vec![proof.a, proof.s];
    let mut scalars = vec![Scalar::ONE, x];
    for j in 0..k {
        points.push(proof.l_vec[j]);
        scalars.push(u[j].square());
        points.push(proof.r_vec[j]);
        scalars.push(u_inv[j].square());
    }
    let variable = msm::msm(&points, &scalars);
    bool::from((fixed + variable).is_identity())
}

impl RangeProof {
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::RANGE_PROOF);
        w.u8(self.bits as u8);
        self.write_body(&mut w);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::RANGE_PROOF)?;
        let bits = r.u8()? as usize;
        let proof = Self::read_body(&mut r, bits)?;
        r.finish()?;
        Ok(proof)
    }

    /// Reads the width-dependent body; the width itself travels in an
    /// enclosing header.
    pub(crate) fn read_body(r: &mut Reader<'_>, bits: usize) -> Result<Self> {
        check_width(bits)?;
        let (a, s, t1, t2) = (r.g1()?, r.g1()?, r.g1()?, r.g1()?);
        let (t_hat, tau_x, mu) = (r.scalar()?, r.scalar()?, r.scalar()?);
        let mut l_vec = Vec::new();
        let mut r_vec = Vec::new();
        for _ in 0..rounds(bits) {
            l_vec.push(r.g1()?);
            r_vec.push(r.g1()?);
        }
        let (a_final, b_final) = (r.scalar()?, r.scalar()?);
        Ok(Self {
            bits,
            a,
            s,
            t1,
            t2,
            t_hat,
            tau_x,
            mu,
            l_vec,
            r_vec,
            a_final,
            b_final,
        })
    }

    pub(crate) fn write_body(&self, w: &mut Writer) {
        w.g1(&self.a).g1(&self.s).g1(&self.t1).g1(&self.t2);
        w.scalar(&self.t_hat).scalar(&self.tau_x).scalar(&self.mu);
        for (l, r) in self.l_vec.iter().zip(&self.r_vec) {
            w.g1(l).g1(r);
        }
        w.scalar(&self.a_final).scalar(&self.b_final);
    }

    /// Every group element in the proof, in serialization order.
    pub fn points(&self) -> Vec<G1Projective> {
        let mut out = vec![self.a, self.s, self.t1, self.t2];
        for (l, r) in self.l_vec.iter().zip(&self.r_vec) {
            out.push(*l);
            out.push(*r);
        }
        out
    }

    pub fn encoded_len(bits: usize) -> usize {
        2 + 1 + 4 * 48 + 3 * 32 + rounds(bits) * 96 + 2 * 32
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(42)
    }

    #[test]
    fn boundaries_at_eight_bits() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        for v in [0i64, 1, 254, 255] {
            let (c, p) = prove_range(v, &blind, 8, &mut rng).unwrap();
            assert!(verify_range(&c, &p, 8), "v={v}");
        }
        assert_eq!(
            prove_range(256, &blind, 8, &mut rng).unwrap_err(),
            Error::OutOfRange { bits: 8 }
        );
        assert_eq!(
            prove_range(-1, &blind, 8, &mut rng).unwrap_err(),
            Error::OutOfRange { bits: 8 }
        );
    }

    #[test]
    fn widths() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        for (bits, v) in [(16usize, 65535i64), (32, u32::MAX as i64)] {
            let (c, p) = prove_range(v, &blind, bits, &mut rng).unwrap();
            assert!(verify_range(&c, &p, bits));
            assert!(!verify_range(&c, &p, 8));
        }
        assert_eq!(
            prove_range(1, &blind, 12, &mut rng).unwrap_err(),
            Error::UnsupportedWidth(12)
        );
        assert!(prove_range(1i64 << 32, &blind, 32, &mut rng).is_err());
    }

    #[test]
    fn wrong_commitment_rejected() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        let (_, p) = prove_range(17, &blind, 8, &mut rng).unwrap();
        let other = commit(&Scalar::from(17u64), &(blind + Scalar::ONE));
        assert!(!verify_range(&other, &p, 8));
    }

    #[test]
    fn negative_field_value_fails() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        let minus_five = -Scalar::from(5u64);
        let mut t = Transcript::new(b"range-proof");
        let (c, p) = prove_unchecked(&mut t, &minus_five, &blind, 8, &mut rng);
        assert!(!verify_range(&c, &p, 8));
    }

    #[test]
    fn transcript_binding() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        let mut t = Transcript::new(b"ctx");
        t.absorb(b"context", b"one");
        let (c, p) = prove_range_in(&mut t, 9, &blind, 8, &mut rng).unwrap();
        let mut t1 = Transcript::new(b"ctx");
        t1.absorb(b"context", b"one");
        assert!(verify_range_in(&mut t1, &c, &p, 8));
        let mut t2 = Transcript::new(b"ctx");
        t2.absorb(b"context", b"two");
        assert!(!verify_range_in(&mut t2, &c, &p, 8));
    }

    #[test]
    fn serialization_round_trip_and_size() {
        let mut rng = rng();
        let blind = Scalar::random(&mut rng);
        let (_, p) = prove_range(1234, &blind, 32, &mut rng).unwrap();
        let bytes = p.to_bytes();
        assert_eq!(bytes.len(), RangeProof::encoded_len(32));
        assert_eq!(RangeProof::from_bytes(&bytes).unwrap(), p);
        assert_eq!(
            RangeProof::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::Truncated)
        );
    }
}
