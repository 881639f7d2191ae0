//! Process exit codes, one per error class.

use iuguard_wire::{ClientError, ErrorCode};

pub const OK: u8 = 0;
/// Bad flags or arguments. Also what clap uses.
pub const USAGE: u8 = 2;
/// Missing or unreadable config, keys, credentials or secrets.
pub const LOCAL: u8 = 3;
/// The requested band is outside the credential's authorization; nothing
/// was sent.
pub const OUT_OF_AUTHORIZATION: u8 = 4;
/// Connection refused, handshake or pin failure, timeout.
pub const TRANSPORT: u8 = 5;
/// Unparseable reply.
pub const PROTOCOL: u8 = 6;
/// Enrollment or login refused.
pub const AUTH: u8 = 10;
/// Nonce or session unknown, expired or reused.
pub const FRESHNESS: u8 = 11;
/// Presentation rejected by the verifier.
pub const REJECTED: u8 = 12;
/// Band outside the managed range or held by another incumbent.
pub const BAND_DENIED: u8 = 13;
pub const RATE_LIMITED: u8 = 14;
/// The service judged our request malformed or unroutable.
pub const BAD_REQUEST: u8 = 15;
/// A 5xx-class fault on the service side.
pub const SERVICE_FAULT: u8 = 16;
/// A benchmark ran but its results are invalid (protocol errors under load).
pub const BENCH_INVALID: u8 = 20;

pub fn for_code(code: ErrorCode) -> u8 {
    use ErrorCode::*;
    match code {
        AuthFailed | NotRegistered | LoginFailed | Forbidden => AUTH,
        NonceRejected | NonceUnknown | NonceExpired | NonceReused | SessionExpired => FRESHNESS,
        ProofInvalid | ContextMismatch | SignatureProofInvalid | RangeLowInvalid
        | RangeHighInvalid => REJECTED,
        BandOutsideManagedRange | BandConflictIu => BAND_DENIED,
        OutOfAuthorization => OUT_OF_AUTHORIZATION,
        RateLimited => RATE_LIMITED,
        MalformedEnvelope | MalformedRequest | NotFound | MethodNotAllowed => BAD_REQUEST,
        StoreUnavailable | UpstreamUnavailable | Internal => SERVICE_FAULT,
    }
}

pub fn for_client_error(e: &ClientError) -> u8 {
    match e {
        ClientError::Service { .. } => e.code().map(for_code).unwrap_or(PROTOCOL),
        ClientError::Timeout | ClientError::Handshake(_) | ClientError::Transport(_) => TRANSPORT,
        ClientError::Malformed(_) => PROTOCOL,
        ClientError::Local(_) => LOCAL,
    }
}

/// An error carrying the exit code it should produce.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn local(e: impl std::fmt::Display) -> Self {
        Self::new(LOCAL, e.to_string())
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        Self::new(for_client_error(&e), e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_code_has_a_nonzero_class_and_classes_are_distinct() {
        for c in ErrorCode::ALL {
            let x = for_code(*c);
            assert!(x != OK && x != USAGE, "{c}");
        }
        let classes = [
            USAGE,
            LOCAL,
            OUT_OF_AUTHORIZATION,
            TRANSPORT,
            PROTOCOL,
            AUTH,
            FRESHNESS,
            REJECTED,
            BAND_DENIED,
            RATE_LIMITED,
            BAD_REQUEST,
            SERVICE_FAULT,
            BENCH_INVALID,
        ];
        let set: std::collections::HashSet<_> = classes.iter().collect();
        assert_eq!(set.len(), classes.len());
    }
}
