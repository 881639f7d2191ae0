//! Static distribution file for issuer public keys and the schema they sign.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ATTRIBUTES, SCHEMA_VERSION};
use crate::crypto::bbs::PublicKey;
use crate::error::{Error, Result};

pub const ISSUERS_FORMAT: &str = "iuguard-issuers v1";

#[derive(Debug, Serialize, Deserialize)]
struct SchemaEntry {
    version: u16,
    attributes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct IssuerEntry {
    fingerprint: String,
    public_key: String,
    schema: SchemaEntry,
}

#[derive(Debug, Serialize, Deserialize)]
struct IssuersFile {
    format: String,
    issuers: Vec<IssuerEntry>,
}

pub fn issuers_to_string(keys: &[PublicKey]) -> String {
    let file = IssuersFile {
        format: ISSUERS_FORMAT.into(),
        issuers: keys
            .iter()
            .map(|pk| IssuerEntry {
                fingerprint: hex::encode(pk.fingerprint()),
                public_key: hex::encode(pk.to_bytes()),
                schema: SchemaEntry {
                    version: SCHEMA_VERSION,
                    attributes: ATTRIBUTES.iter().map(|s| s.to_string()).collect(),
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("issuers serialize") + "\n"
}

/// Parses and checks every entry: the fingerprint must match the key and the
/// schema must be the one this build understands.
pub fn parse_issuers(text: &str) -> Result<Vec<PublicKey>> {
    let file: IssuersFile = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    if file.format != ISSUERS_FORMAT {
        return Err(Error::Schema(format!(
            "unsupported issuers format {:?}",
            file.format
        )));
    }
    file.issuers
        .iter()
        .map(|e| {
            if e.schema.version != SCHEMA_VERSION || e.schema.attributes != ATTRIBUTES {
                return Err(Error::Schema("issuer schema does not match".into()));
            }
            let bytes = hex::decode(&e.public_key).map_err(|_| Error::Decode("issuer key hex"))?;
            let pk = PublicKey::from_bytes(&bytes)?;
            if hex::encode(pk.fingerprint()) != e.fingerprint {
                return Err(Error::Schema("issuer fingerprint mismatch".into()));
            }
            Ok(pk)
        })
        .collect()
}

pub fn load_issuers(path: impl AsRef<Path>) -> Result<Vec<PublicKey>> {
    parse_issuers(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::bbs::keygen;

    #[test]
    fn round_trip_and_checks() {
        let pk = keygen(&[1; 32], 4).unwrap().public_key().clone();
        let text = issuers_to_string(std::slice::from_ref(&pk));
        assert_eq!(parse_issuers(&text).unwrap(), vec![pk.clone()]);
        let bad_fp = text.replace(&hex::encode(pk.fingerprint()), &"00".repeat(32));
        assert!(parse_issuers(&bad_fp).is_err());
        let bad_schema = text.replace("f_high_khz", "f_top_khz");
        assert!(parse_issuers(&bad_schema).is_err());
    }
}
