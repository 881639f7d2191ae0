//! Message envelope: `{"correlation_id","payload","type","version"}` in
//! canonical JSON. Binary payload fields are base64url without padding.

use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codes::ErrorCode;

pub const PROTOCOL_VERSION: u32 = 1;
pub const ERROR_TYPE: &str = "error";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("expected message type {expected}, got {got}")]
    Type { expected: String, got: String },
    #[error("malformed payload: {0}")]
    Payload(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub version: u32,
    #[serde(rename = "type")]
    pub kind: String,
    pub correlation_id: String,
    pub payload: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorPayload {
    pub code: String,
    pub message: String,
}

pub fn new_correlation_id() -> String {
    let mut b = [0u8; 16];
    rand::Rng::fill_bytes(&mut rand::rng(), &mut b);
    hex::encode(b)
}

impl Envelope {
    pub fn new<T: Serialize>(kind: &str, payload: &T) -> Self {
        Self::with_id(new_correlation_id(), kind, payload)
    }

    pub fn with_id<T: Serialize>(correlation_id: String, kind: &str, payload: &T) -> Self {
        Self {
            version: PROTOCOL_VERSION,
            kind: kind.to_string(),
            correlation_id,
            payload: serde_json::to_value(payload).expect("payload types serialize"),
        }
    }

    pub fn reply<T: Serialize>(&self, kind: &str, payload: &T) -> Self {
        Self::with_id(self.correlation_id.clone(), kind, payload)
    }

    pub fn error(correlation_id: String, code: ErrorCode, message: &str) -> Self {
        Self::with_id(
            correlation_id,
            ERROR_TYPE,
            &ErrorPayload {
                code: code.as_str().to_string(),
                message: message.to_string(),
            },
        )
    }

    pub fn is_error(&self) -> bool {
        self.kind == ERROR_TYPE
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        iuguard_core::canonical::to_canonical_string(self)
            .expect("envelope serializes")
            .into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EnvelopeError> {
        let env: Envelope =
            serde_json::from_slice(bytes).map_err(|e| EnvelopeError::Malformed(e.to_string()))?;
        if env.version != PROTOCOL_VERSION {
            return Err(EnvelopeError::Version(env.version));
        }
        if env.correlation_id.is_empty() || env.correlation_id.len() > 64 {
            return Err(EnvelopeError::Malformed("correlation_id length".into()));
        }
        Ok(env)
    }

    pub fn expect<T: DeserializeOwned>(&self, kind: &str) -> Result<T, EnvelopeError> {
        if self.kind != kind {
            return Err(EnvelopeError::Type {
                expected: kind.to_string(),
                got: self.kind.clone(),
            });
        }
        serde_json::from_value(self.payload.clone()).map_err(|e| EnvelopeError::Payload(e.to_string()))
    }
}

pub fn b64encode(bytes: &[u8]) -> String {
    base64::engine::general_purpose::URL_SAFE_NO_PAD.encode(bytes)
}

pub fn b64decode(s: &str) -> Result<Vec<u8>, EnvelopeError> {
    base64::engine::general_purpose::URL_SAFE_NO_PAD
        .decode(s)
        .map_err(|e| EnvelopeError::Payload(format!("base64url: {e}")))
}

/// Serde adapter for binary fields.
pub mod b64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::b64encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::b64decode(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_layout() {
        let e = Envelope::with_id(
            "ab".into(),
            "challenge",
            &serde_json::json!({"z": 1, "a": "x"}),
        );
        assert_eq!(
            String::from_utf8(e.to_bytes()).unwrap(),
            r#"{"correlation_id":"ab","payload":{"a":"x","z":1},"type":"challenge","version":1}"#
        );
    }

    #[test]
    fn rejects_wrong_version_and_unknown_fields() {
        let bad = br#"{"correlation_id":"ab","payload":{},"type":"t","version":2}"#;
        assert_eq!(Envelope::from_bytes(bad), Err(EnvelopeError::Version(2)));
        let extra = br#"{"correlation_id":"ab","extra":0,"payload":{},"type":"t","version":1}"#;
        assert!(Envelope::from_bytes(extra).is_err());
        assert!(Envelope::from_bytes(b"not json").is_err());
    }

    #[test]
    fn base64url_has_no_padding() {
        assert_eq!(b64encode(&[0xfb, 0xff]), "-_8");
        assert_eq!(b64decode("-_8").unwrap(), vec![0xfb, 0xff]);
        assert!(b64decode("-_8=").is_err());
    }
}
