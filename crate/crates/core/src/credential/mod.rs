//! The incumbent credential: a four-attribute signature issued by the CA over
//! `(link_secret, iu_id, f_low_khz, f_high_khz)`.

mod issuance;
pub mod issuers;
pub mod registry;

use std::path::Path;

use bls12_381::Scalar;
use sha2::{Digest, Sha512};

use crate::band::Band;
use crate::crypto::bbs::{verify_signature, PublicKey, Signature};
use crate::crypto::codec::{tag, Reader, Writer};
use crate::error::{Error, Result};

pub use issuance::{
    create_credential_request, enrollment_mac, finalize_credential, finalize_credential_bytes,
    issue_credential, CredentialRequest, HolderState, IssuanceResponse, Issuer,
};
pub use registry::{load_registry, parse_registry, Registry, RegistryRecord};

pub const SCHEMA_VERSION: u16 = 1;
pub const ATTRIBUTES: [&str; 4] = ["link_secret", "iu_id", "f_low_khz", "f_high_khz"];
pub const MESSAGE_COUNT: usize = ATTRIBUTES.len();
pub const LINK_SECRET: usize = 0;
pub const IU_ID: usize = 1;
pub const F_LOW: usize = 2;
pub const F_HIGH: usize = 3;

/// Domain-separated encoding of a string identifier as a message scalar.
pub fn hash_to_scalar(label: &[u8], value: &[u8]) -> Scalar {
    let mut h = Sha512::new();
    h.update((label.len() as u32).to_be_bytes());
    h.update(label);
    h.update(value);
    Scalar::from_bytes_wide(&h.finalize().into())
}

pub fn encode_iu_id(iu_id: &str) -> Scalar {
    hash_to_scalar(b"iuguard-iu-id-v1", iu_id.as_bytes())
}

pub fn encode_attributes(
    link_secret: &Scalar,
    iu_id: &str,
    band: &Band,
) -> [Scalar; MESSAGE_COUNT] {
    [
        *link_secret,
        encode_iu_id(iu_id),
        Scalar::from(band.f_low_khz as u64),
        Scalar::from(band.f_high_khz as u64),
    ]
}

#[derive(Clone, PartialEq, Eq)]
pub struct Credential {
    pub(crate) link_secret: Scalar,
    pub(crate) iu_id: String,
    pub(crate) band: Band,
    pub(crate) signature: Signature,
    pub(crate) issuer_fp: [u8; 32],
}

impl std::fmt::Debug for Credential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credential")
            .field("iu_id", &self.iu_id)
            .field("band", &self.band)
            .field("issuer_fp", &hex::encode(self.issuer_fp))
            .finish_non_exhaustive()
    }
}

impl Credential {
    pub fn iu_id(&self) -> &str {
        &self.iu_id
    }

    pub fn band(&self) -> Band {
        self.band
    }

    pub fn issuer_fingerprint(&self) -> [u8; 32] {
        self.issuer_fp
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn messages(&self) -> [Scalar; MESSAGE_COUNT] {
        encode_attributes(&self.link_secret, &self.iu_id, &self.band)
    }

    /// Exposes the holder-only secret; needed for audits that scan other
    /// parties' data for it.
    pub fn link_secret(&self) -> &Scalar {
        &self.link_secret
    }

    pub fn verify(&self, pk: &PublicKey) -> bool {
        pk.fingerprint() == self.issuer_fp
            && verify_signature(pk, &self.messages(), &self.signature)
    }

    /// At-rest envelope: tag, schema version, attribute plaintexts,
    /// signature, issuer fingerprint.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::with_tag(tag::CREDENTIAL);
        w.u16(SCHEMA_VERSION)
            .scalar(&self.link_secret)
            .var(self.iu_id.as_bytes())
            .u32(self.band.f_low_khz)
            .u32(self.band.f_high_khz);
        self.signature.write(&mut w);
        w.raw(&self.issuer_fp);
        w.finish()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::expect_tag(bytes, tag::CREDENTIAL)?;
        let version = r.u16()?;
        if version != SCHEMA_VERSION {
            return Err(Error::Decode("unsupported credential schema version"));
        }
        let link_secret = r.scalar()?;
        let iu_id =
            String::from_utf8(r.var()?.to_vec()).map_err(|_| Error::Decode("iu_id utf-8"))?;
        let band = Band::new(r.u32()?, r.u32()?).ok_or(Error::Decode("credential band"))?;
        let signature = Signature::read(&mut r)?;
        let issuer_fp = r.array::<32>()?;
        r.finish()?;
        Ok(Self {
            link_secret,
            iu_id,
            band,
            signature,
            issuer_fp,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_private(path.as_ref(), &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

/// Writes a file readable only by its owner where the platform supports it.
pub(crate) fn write_private(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let mut opts = std::fs::OpenOptions::new();
    opts.write(true).create(true).truncate(true);
    #[cfg(unix)]
    {
        use std::os::unix::fs::OpenOptionsExt;
        opts.mode(0o600);
    }
    let mut f = opts.open(path)?;
    f.write_all(bytes)?;
    Ok(())
}
