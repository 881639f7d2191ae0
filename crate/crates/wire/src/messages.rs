//! Payload schemas and their envelope type tags.

use iuguard_core::coordinator::{Grant, Preemption};
use iuguard_core::presentation::{AccessRequest, Location, TimeWindow};
use serde::{Deserialize, Serialize};

use crate::envelope::b64;

pub mod kind {
    pub const NONCE_REQUEST: &str = "nonce-request";
    pub const NONCE: &str = "nonce";
    pub const CREDENTIAL_REQUEST: &str = "credential-request";
    pub const ISSUANCE_RESPONSE: &str = "issuance-response";
    pub const BASELINE_ENROLLMENT: &str = "baseline-enrollment";
    pub const BASELINE_PROFILE: &str = "baseline-profile";
    pub const CHALLENGE: &str = "challenge";
    pub const ACCESS_REQUEST: &str = "access-request";
    pub const PLAIN_ACCESS_REQUEST: &str = "plain-access-request";
    pub const ACCESS_GRANTED: &str = "access-granted";
    pub const GRANT: &str = "grant";
    pub const RELEASED: &str = "released";
    pub const LOGIN: &str = "login";
    pub const SESSION: &str = "session";
    pub const REPORT: &str = "report";
    pub const ECHO: &str = "echo";
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Empty {}

/// Reply to `POST /v1/nonce` and `GET /v1/challenge`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonceMsg {
    #[serde(with = "b64")]
    pub nonce: Vec<u8>,
    pub expires_in_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CredentialRequestMsg {
    #[serde(with = "b64")]
    pub request: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuanceResponseMsg {
    #[serde(with = "b64")]
    pub response: Vec<u8>,
}

/// Baseline issuance: same authentication, no signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineEnrollmentMsg {
    pub iu_id: String,
    #[serde(with = "b64")]
    pub nonce: Vec<u8>,
    #[serde(with = "b64")]
    pub enrollment_mac: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineProfileMsg {
    pub iu_id: String,
    pub f_low_khz: u32,
    pub f_high_khz: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessMsg {
    #[serde(with = "b64")]
    pub presentation: Vec<u8>,
    pub request: AccessRequest,
    #[serde(with = "b64")]
    pub nonce: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlainAccessMsg {
    pub request: AccessRequest,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrantMsg {
    pub grant_id: String,
    pub f_low_khz: u32,
    pub f_high_khz: u32,
    pub location: Location,
    pub time_window: TimeWindow,
    pub expiry_unix_s: u64,
    pub granted_at_unix_s: u64,
}

impl From<&Grant> for GrantMsg {
    fn from(g: &Grant) -> Self {
        Self {
            grant_id: g.id.to_string(),
            f_low_khz: g.band.f_low_khz,
            f_high_khz: g.band.f_high_khz,
            location: g.location,
            time_window: g.time_window,
            expiry_unix_s: g.expiry,
            granted_at_unix_s: g.granted_at,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessGrantedMsg {
    pub grant: GrantMsg,
    pub preemption: Vec<Preemption>,
    /// Server-side authorization time; zero on the plain path.
    pub verify_us: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReleasedMsg {
    pub grant_id: String,
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoginMsg {
    pub username: String,
    pub password: String,
}

impl std::fmt::Debug for LoginMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LoginMsg")
            .field("username", &self.username)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionMsg {
    pub session_token: String,
    pub expires_in_s: u64,
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportMsg {
    pub session_token: String,
    pub request: AccessRequest,
}

impl std::fmt::Debug for SessionMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionMsg")
            .field("expires_in_s", &self.expires_in_s)
            .finish_non_exhaustive()
    }
}

impl std::fmt::Debug for ReportMsg {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReportMsg")
            .field("request", &self.request)
            .finish_non_exhaustive()
    }
}
