use std::collections::HashSet;

use iuguard_core::credential::{encode_iu_id, Credential};
use iuguard_core::crypto::bbs::SignerKeyPair;
use iuguard_core::crypto::codec::{g1_to_bytes, scalar_to_bytes};
use iuguard_core::fixtures::{issue_credential_for, issuer_keypair};
use iuguard_core::nonce::Nonce;
use iuguard_core::presentation::{
    derive_presentation, derive_presentation_unchecked, deserialize_presentation,
    serialize_presentation, verify_presentation, AccessRequest, Location, Presentation,
    RejectReason, TimeWindow, Verdict,
};
use iuguard_core::{Band, Error};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;

const CBRS: Band = Band {
    f_low_khz: 3_550_000,
    f_high_khz: 3_700_000,
};

fn request(band: Band) -> AccessRequest {
    AccessRequest::new(
        band,
        Location {
            lat_microdeg: 36_850_000,
            lon_microdeg: -76_290_000,
        },
        TimeWindow {
            start_unix_s: 1_760_000_000,
            duration_s: 600,
        },
    )
}

struct Setup {
    kp: SignerKeyPair,
    cred: Credential,
    rng: ChaCha20Rng,
}

fn setup(seed: u64) -> Setup {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let kp = issuer_keypair(1);
    let cred = issue_credential_for(&kp, "radar-01", CBRS, &mut rng);
    Setup { kp, cred, rng }
}

fn rejected(v: Verdict) -> bool {
    !v.is_accepted()
}

#[test]
fn randomized_completeness() {
    let mut s = setup(1);
    let pk = s.kp.public_key().clone();
    for _ in 0..40 {
        let lo = s.rng.random_range(CBRS.f_low_khz..CBRS.f_high_khz - 1);
        let hi = s.rng.random_range(lo + 1..=CBRS.f_high_khz);
        let auth = Band::new(lo, hi).unwrap();
        let cred = issue_credential_for(&s.kp, "iu", auth, &mut s.rng);
        let rlo = s.rng.random_range(lo..hi);
        let rhi = s.rng.random_range(rlo + 1..=hi);
        let req = request(Band::new(rlo, rhi).unwrap());
        let n = Nonce::random(&mut s.rng);
        let p = derive_presentation(&pk, &cred, &req, &n, &mut s.rng).unwrap();
        assert_eq!(
            verify_presentation(&pk, &p, &req, &n),
            Verdict::Accepted,
            "{auth} {req:?}"
        );
    }
}

#[test]
fn cbrs_endpoints_and_exact_band() {
    let mut s = setup(2);
    let pk = s.kp.public_key();
    for band in [Band::new(3_550_000, 3_560_000).unwrap(), CBRS] {
        let req = request(band);
        let n = Nonce::random(&mut s.rng);
        let p = derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap();
        assert_eq!(verify_presentation(pk, &p, &req, &n), Verdict::Accepted);
    }
}

#[test]
fn out_of_band_requests_fail_locally_and_forged_ones_fail_remotely() {
    let mut s = setup(3);
    let pk = s.kp.public_key();
    let cases = [
        (
            Band::new(3_540_000, 3_560_000).unwrap(),
            RejectReason::RangeLowInvalid,
        ),
        (
            Band::new(3_549_999, 3_560_000).unwrap(),
            RejectReason::RangeLowInvalid,
        ),
        (
            Band::new(3_690_000, 3_700_001).unwrap(),
            RejectReason::RangeHighInvalid,
        ),
    ];
    for (band, reason) in cases {
        let req = request(band);
        let n = Nonce::random(&mut s.rng);
        assert_eq!(
            derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap_err(),
            Error::OutOfAuthorization
        );
        let forged = derive_presentation_unchecked(pk, &s.cred, &req, &n, &mut s.rng).unwrap();
        assert_eq!(
            verify_presentation(pk, &forged, &req, &n),
            Verdict::Rejected(reason)
        );
    }
}

#[test]
fn negative_gap_field_encoding_rejected() {
    let mut s = setup(4);
    let pk = s.kp.public_key();
    // d1 = f_low_req − f_low = −10000, i.e. r − 10000 in the field.
    let req = request(Band::new(3_540_000, 3_600_000).unwrap());
    let n = Nonce::random(&mut s.rng);
    let forged = derive_presentation_unchecked(pk, &s.cred, &req, &n, &mut s.rng).unwrap();
    assert_eq!(
        verify_presentation(pk, &forged, &req, &n),
        Verdict::Rejected(RejectReason::RangeLowInvalid)
    );
}

#[test]
fn replay_under_fresh_nonce_is_context_mismatch() {
    let mut s = setup(5);
    let pk = s.kp.public_key();
    let req = request(Band::new(3_550_000, 3_560_000).unwrap());
    let n = Nonce::random(&mut s.rng);
    let p = derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap();
    let fresh = Nonce::random(&mut s.rng);
    assert_eq!(
        verify_presentation(pk, &p, &req, &fresh),
        Verdict::Rejected(RejectReason::ContextMismatch)
    );
    let mut moved = req;
    moved.location.lat_microdeg += 1;
    assert_eq!(
        verify_presentation(pk, &p, &moved, &n),
        Verdict::Rejected(RejectReason::ContextMismatch)
    );
}

#[test]
fn adversarial_constructions_rejected() {
    let mut s = setup(6);
    let pk = s.kp.public_key().clone();
    let req = request(Band::new(3_600_000, 3_610_000).unwrap());
    let n = Nonce::random(&mut s.rng);
    let honest = derive_presentation(&pk, &s.cred, &req, &n, &mut s.rng).unwrap();

    let mut swapped = honest.clone();
    swapped.swap_linking_commitments();
    assert!(rejected(verify_presentation(&pk, &swapped, &req, &n)));

    // Foreign issuer: a credential from another CA presented to this one.
    let foreign_kp = issuer_keypair(2);
    let foreign = issue_credential_for(&foreign_kp, "radar-01", CBRS, &mut s.rng);
    let p = derive_presentation(foreign_kp.public_key(), &foreign, &req, &n, &mut s.rng).unwrap();
    assert_eq!(
        verify_presentation(&pk, &p, &req, &n),
        Verdict::Rejected(RejectReason::SignatureProofInvalid)
    );

    // Reused signature proof with range proofs from another derivation.
    let other = derive_presentation(&pk, &s.cred, &req, &n, &mut s.rng).unwrap();
    let mut grafted = honest.clone();
    grafted.graft_ranges_from(&other);
    assert!(rejected(verify_presentation(&pk, &grafted, &req, &n)));

    assert_eq!(
        verify_presentation(&pk, &honest, &req, &n),
        Verdict::Accepted
    );
}

#[test]
fn serialization_round_trip_and_size() {
    let mut s = setup(7);
    let pk = s.kp.public_key();
    let req = request(Band::new(3_550_000, 3_560_000).unwrap());
    let n = Nonce::random(&mut s.rng);
    let p = derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap();
    let bytes = serialize_presentation(&p);
    assert_eq!(deserialize_presentation(&bytes).unwrap(), p);
    assert_eq!(
        serialize_presentation(&deserialize_presentation(&bytes).unwrap()),
        bytes
    );
    assert!(deserialize_presentation(&bytes[..bytes.len() - 1]).is_err());
    let mut wrong_tag = bytes.clone();
    wrong_tag[1] ^= 0x02;
    assert!(matches!(
        deserialize_presentation(&wrong_tag),
        Err(Error::FormatTag(_))
    ));
    assert!(bytes.len() <= 50 * 1024, "{} bytes", bytes.len());
    assert!(s.cred.to_bytes().len() <= 20 * 1024);
}

#[test]
fn every_single_byte_mutation_rejected() {
    let mut s = setup(8);
    let pk = s.kp.public_key();
    let req = request(Band::new(3_550_000, 3_560_000).unwrap());
    let n = Nonce::random(&mut s.rng);
    let bytes =
        serialize_presentation(&derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap());
    for pos in 0..bytes.len() {
        let mut b = bytes.clone();
        b[pos] ^= 0x01;
        if let Ok(p) = deserialize_presentation(&b) {
            assert!(
                rejected(verify_presentation(pk, &p, &req, &n)),
                "byte {pos} accepted"
            );
        }
    }
}

fn windows(p: &Presentation) -> (Vec<u8>, usize) {
    (serialize_presentation(p), p.header_len())
}

#[test]
fn presentations_share_no_elements_or_windows() {
    let mut s = setup(9);
    let pk = s.kp.public_key();
    let req = request(Band::new(3_550_000, 3_560_000).unwrap());
    for _ in 0..5 {
        let a =
            derive_presentation(pk, &s.cred, &req, &Nonce::random(&mut s.rng), &mut s.rng).unwrap();
        let b =
            derive_presentation(pk, &s.cred, &req, &Nonce::random(&mut s.rng), &mut s.rng).unwrap();
        let pa: HashSet<_> = a.points().iter().map(g1_to_bytes).collect();
        assert!(b.points().iter().all(|q| !pa.contains(&g1_to_bytes(q))));
        let ((ba, ha), (bb, hb)) = (windows(&a), windows(&b));
        assert_eq!(ha, hb);
        assert_eq!(ba[..ha], bb[..hb], "header is public and identical");
        for i in ha..ba.len() - 7 {
            assert_ne!(ba[i..i + 8], bb[i..i + 8], "window at {i}");
        }
    }
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    hay.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn presentation_carries_no_attribute_encodings() {
    let mut s = setup(10);
    let pk = s.kp.public_key();
    let id = s.cred.iu_id().to_string();
    let id_scalar = scalar_to_bytes(&encode_iu_id(&id));
    let mut id_le = id_scalar;
    id_le.reverse();
    let mut needles: Vec<Vec<u8>> =
        vec![id.as_bytes().to_vec(), id_scalar.to_vec(), id_le.to_vec()];
    for v in [CBRS.f_low_khz, CBRS.f_high_khz] {
        needles.push(v.to_be_bytes().to_vec());
        needles.push(v.to_le_bytes().to_vec());
        needles.push(v.to_string().into_bytes());
        needles.push(scalar_to_bytes(&iuguard_core::crypto::Scalar::from(v as u64)).to_vec());
    }
    needles.push(scalar_to_bytes(s.cred.link_secret()).to_vec());
    // Request inside the band but away from its edges so the plaintext
    // request values differ from the credential's.
    let req = request(Band::new(3_600_000, 3_610_000).unwrap());
    for _ in 0..3 {
        let n = Nonce::random(&mut s.rng);
        let bytes = serialize_presentation(
            &derive_presentation(pk, &s.cred, &req, &n, &mut s.rng).unwrap(),
        );
        for needle in &needles {
            assert!(!contains(&bytes, needle), "found {}", hex::encode(needle));
        }
    }
}
