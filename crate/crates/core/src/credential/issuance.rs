use std::sync::Arc;

use bls12_381::{G1Projective, Scalar};
use ff::Field;
use hmac::{Hmac, Mac};
use rand_core::CryptoRng;
use sha2::Sha256;
use subtle::ConstantTimeEq;

use super::registry::Registry;
use super::{encode_iu_id, Credential, F_HIGH, F_LOW, IU_ID, MESSAGE_COUNT};
use crate::band::Band;
use crate::crypto::bbs::{
    blind_sign, commit_link_secret, unblind, verify_signature, BlindCommitment, Blinding,
    PublicKey, Signature, SignerKeyPair,
};
use crate::crypto::codec::{tag, Reader, Writer};
use crate::error::{Error, Result};
use crate::nonce::{Nonce, NonceStore};

/// HMAC-SHA256 over the CA nonce and claimed id, keyed by the enrollment
/// secret shared out of band at registration.
pub fn enrollment_mac(secret: &[u8; 32], nonce: &Nonce, iu_id: &str) -> [u8; 32] {
    let mut mac = Hmac::<Sha256>::new_from_slice(secret).expect("any key length");
    mac.update(b"iuguard-enroll-v1");
    mac.update(nonce.as_bytes());
    mac.update(iu_id.as_bytes());
    mac.finalize().into_bytes().into()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CredentialRequest {
    pub iu_id: String,
    pub nonce: Nonce,
    pub enrollment_mac: [u8; 32],
    pub blinded: BlindCommitment,
    /// Requester-supplied band; recorded for audit, never signed.
    pub claimed_band: Option<Band>,
}

/// Holder-side secrets for one outstanding request.
#[derive(Clone, PartialEq, Eq)]
pub struct HolderState {
    link_secret: Scalar,
    blinding: Blinding,
    commitment: G1Projective,
    iu_id: String,
}

impl std::fmt::Debug for HolderState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolderState")
            .field("iu_id", &self.iu_id)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IssuanceResponse {
    pub signature: Signature,
    pub iu_id: String,
    pub band: Band,
    /// Echo of the request commitment, so the holder can match its state.
    pub commitment: G1Projective,
    pub issuer_fp: [u8; 32],
}

pub fn create_credential_request<R: CryptoRng + ?Sized>(
    pk: &PublicKey,
    iu_id: &str,
    enrollment_secret: &[u8; 32],
    ca_nonce: &Nonce,
    rng: &mut R,
) -> (CredentialRequest, HolderState) {
    let link_secret = Scalar::random(&mut *rng);
    let (blinded, blinding) = commit_link_secret(pk, &link_secret, ca_nonce.as_bytes(), rng);
    let req = CredentialRequest {
        iu_id: iu_id.to_string(),
        nonce: *ca_nonce,
        enrollment_mac: enrollment_mac(enrollment_secret, ca_nonce, iu_id),
        blinded,
        claimed_band: None,
    };
    let state = HolderState {
        link_secret,
        blinding,
        commitment: blinded.commitment,
        iu_id: iu_id.to_string(),
    };
    (req, state)
}

/// The credential authority: registry, signing key and its nonce store.
pub struct Issuer {
    registry: Arc<Registry>,
    keypair: SignerKeyPair,
    nonces: NonceStore,
}

impl Issuer {
    pub fn new(
        registry: Arc<Registry>,
        keypair: SignerKeyPair,
        nonces: NonceStore,
    ) -> Result<Self> {
        if keypair.public_key().message_count() != MESSAGE_COUNT {
            return Err(Error::Schema(format!(
                "issuer key signs {} messages, schema needs {MESSAGE_COUNT}",
                keypair.public_key().message_count()
            )));
        }
        Ok(Self {
            registry,
            keypair,
            nonces,
        })
    }

    pub fn public_key(&self) -> &PublicKey {
        self.keypair.public_key()
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn issue_nonce<R: CryptoRng + ?Sized>(&self, rng: &mut R) -> Nonce {
        self.nonces.issue(rng).0
    }

    pub fn nonces(&self) -> &NonceStore {
        &self.nonces
    }
}

/// Consumes the request nonce first so that every attempt, successful or
/// not, burns it. The signed band always comes from the registry.
pub fn issue_credential<R: CryptoRng + ?Sized>(
    issuer: &Issuer,
    req: &CredentialRequest,
    rng: &mut R,
) -> Result<IssuanceResponse> {
    issuer
        .nonces
        .consume(&req.nonce)
        .map_err(|_| Error::IssuanceNonce)?;
    let record = issuer
        .registry
        .get(&req.iu_id)
        .ok_or_else(|| Error::NotRegistered(req.iu_id.clone()))?;
    let expect = enrollment_mac(&record.enrollment_secret, &req.nonce, &req.iu_id);
    if !bool::from(expect.ct_eq(&req.enrollment_mac)) {
        return Err(Error::AuthFailed);
    }
    let band = record.band();
    let known = [
        (IU_ID, encode_iu_id(&record.iu_id)),
        (F_LOW, Scalar::from(band.f_low_khz as u64)),
        (F_HIGH, Scalar::from(band.f_high_khz as u64)),
    ];
    let signature = blind_sign(
        &issuer.keypair,
        &req.blinded,
        req.nonce.as_bytes(),
        &known,
        rng,
    )?;
    Ok(IssuanceResponse {
        signature,
        iu_id: record.iu_id.clone(),
        band,
        commitment: req.blinded.commitment,
        issuer_fp: issuer.public_key().fingerprint(),
    })
}

pub fn finalize_credential(
    pk: &PublicKey,
    response: &IssuanceResponse,
    state: &HolderState,
) -> Result<Credential> {
    if response.commitment != state.commitment || response.iu_id != state.iu_id {
        return Err(Error::HolderStateMismatch);
    }
    if response.issuer_fp != pk.fingerprint() {
        return Err(Error::IssuanceIntegrity);
    }
    let signature = unblind(&response.signature, &state.blinding);
    let cred = Credential {
        link_secret: state.link_secret,
        iu_id: response.iu_id.clone(),
        band: response.band,
        signature,
        issuer_fp: response.issuer_fp,
    };
    if !verify_signature(pk, &cred.messages(), &signature) {
        return Err(Error::IssuanceIntegrity);
    }
    Ok(cred)
}

/// Transport-level finalization. A damaged response cannot be told apart from
/// one meant for another request, so every failure is an integrity failure.
pub fn finalize_credential_bytes(
    pk: &PublicKey,
    response: &[u8],
    state: &HolderState,
) -> Result<Credential> {
    IssuanceResponse::from_bytes(response)
        .and_then(|resp| finalize_credential(pk, &resp, state))
        .map_err(|_| Error::IssuanceIntegrity)
}

impl CredentialRequest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::CREDENTIAL_REQUEST);
        w.var(self.iu_id.as_bytes())
            .raw(self.nonce.as_bytes())
            .raw(&self.enrollment_mac)
            .var(&self.blinded.to_bytes());
        match self.claimed_band {
            None => {
                w.u8(0);
            }
            Some(b) => {
                w.u8(1).u32(b.f_low_khz).u32(b.f_high_khz);
            }
        }
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::CREDENTIAL_REQUEST)?;
        let iu_id =
            String::from_utf8(r.var()?.to_vec()).map_err(|_| Error::Decode("iu_id utf-8"))?;
        let nonce = Nonce(r.array::<32>()?);
        let enrollment_mac = r.array::<32>()?;
        let blinded = BlindCommitment::from_bytes(r.var()?)?;
        let claimed_band = match r.u8()? {
            0 => None,
            1 => Some(Band::new(r.u32()?, r.u32()?).ok_or(Error::Decode("claimed band"))?),
            _ => return Err(Error::Decode("claimed band flag")),
        };
        r.finish()?;
        Ok(Self {
            iu_id,
            nonce,
            enrollment_mac,
            blinded,
            claimed_band,
        })
    }
}

impl IssuanceResponse {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::ISSUANCE_RESPONSE);
        self.signature.write(&mut w);
        w.var(self.iu_id.as_bytes())
            .u32(self.band.f_low_khz)
            .u32(self.band.f_high_khz)
            .g1(&self.commitment)
            .raw(&self.issuer_fp);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::ISSUANCE_RESPONSE)?;
        let signature = Signature::read(&mut r)?;
        let iu_id =
            String::from_utf8(r.var()?.to_vec()).map_err(|_| Error::Decode("iu_id utf-8"))?;
        let band = Band::new(r.u32()?, r.u32()?).ok_or(Error::Decode("band"))?;
        let commitment = r.g1()?;
        let issuer_fp = r.array::<32>()?;
        r.finish()?;
        Ok(Self {
            signature,
            iu_id,
            band,
            commitment,
            issuer_fp,
        })
    }
}
