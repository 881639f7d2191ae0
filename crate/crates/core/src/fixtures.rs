//! Helpers for tests and benchmarks: one-call credential issuance against an
//! in-memory registry.

use std::sync::Arc;

use rand_core::CryptoRng;

use crate::band::Band;
use crate::credential::registry::{Antenna, DeviceType, RegistryRecord};
use crate::credential::{
    create_credential_request, finalize_credential, issue_credential, Credential, Issuer, Registry,
};
use crate::crypto::bbs::{keygen, SignerKeyPair};
use crate::nonce::NonceStore;

pub fn record(iu_id: &str, band: Band) -> RegistryRecord {
    let mut secret = [0u8; 32];
    for (i, b) in iu_id.bytes().enumerate() {
        secret[i % 32] ^= b;
    }
    RegistryRecord {
        iu_id: iu_id.to_string(),
        device_type: DeviceType::GroundRadar,
        antenna: Antenna {
            gain_dbi: 30.0,
            orientation_deg: 0.0,
            height_m: 10.0,
        },
        max_power_dbm: 60.0,
        authorized_f_low_khz: band.f_low_khz,
        authorized_f_high_khz: band.f_high_khz,
        system_type: "fixture".into(),
        enrollment_secret: secret,
    }
}

pub fn issuer_keypair(seed: u8) -> SignerKeyPair {
    keygen(&[seed; 32], crate::credential::MESSAGE_COUNT).expect("valid schema")
}

/// Runs the full three-step blind issuance flow for each `(iu_id, band)`.
pub fn issue_credentials<R: CryptoRng + ?Sized>(
    kp: &SignerKeyPair,
    holders: &[(String, Band)],
    rng: &mut R,
) -> Vec<Credential> {
    let records = holders.iter().map(|(id, b)| record(id, *b)).collect();
    let registry = Arc::new(Registry::from_records(records).expect("fixture registry"));
    let issuer = Issuer::new(registry.clone(), kp.clone(), NonceStore::default()).expect("issuer");
    holders
        .iter()
        .map(|(id, _)| {
            let secret = registry.get(id).unwrap().enrollment_secret;
            let nonce = issuer.issue_nonce(rng);
            let (req, state) = create_credential_request(kp.public_key(), id, &secret, &nonce, rng);
            let resp = issue_credential(&issuer, &req, rng).expect("issuance");
            finalize_credential(kp.public_key(), &resp, &state).expect("finalize")
        })
        .collect()
}

pub fn issue_credential_for<R: CryptoRng + ?Sized>(
    kp: &SignerKeyPair,
    iu_id: &str,
    band: Band,
    rng: &mut R,
) -> Credential {
    issue_credentials(kp, &[(iu_id.to_string(), band)], rng).remove(0)
}
