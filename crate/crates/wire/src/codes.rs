//! Stable machine-readable error codes, one per denial or fault class.

use iuguard_core::coordinator::Denied;
use iuguard_core::presentation::RejectReason;
use iuguard_core::Error;

macro_rules! codes {
    ($($name:ident = ($s:literal, $status:literal),)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum ErrorCode { $($name,)* }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$name,)*];

            pub fn as_str(&self) -> &'static str {
                match self { $(ErrorCode::$name => $s,)* }
            }

            /// HTTP status carried with the code: 4xx for the caller's
            /// fault or a protocol denial, 5xx for ours.
            pub fn status(&self) -> u16 {
                match self { $(ErrorCode::$name => $status,)* }
            }
        }

        impl std::str::FromStr for ErrorCode {
            type Err = ();

            fn from_str(s: &str) -> Result<Self, ()> {
                match s { $($s => Ok(ErrorCode::$name),)* _ => Err(()) }
            }
        }
    };
}

codes! {
    MalformedEnvelope = ("MALFORMED_ENVELOPE", 400),
    MalformedRequest = ("MALFORMED_REQUEST", 400),
    NotFound = ("NOT_FOUND", 404),
    MethodNotAllowed = ("METHOD_NOT_ALLOWED", 405),
    Forbidden = ("FORBIDDEN", 403),
    RateLimited = ("RATE_LIMITED", 429),
    AuthFailed = ("AUTH_FAILED", 401),
    NotRegistered = ("NOT_REGISTERED", 403),
    NonceRejected = ("NONCE_REJECTED", 400),
    ProofInvalid = ("PROOF_INVALID", 400),
    NonceUnknown = ("NONCE_UNKNOWN", 400),
    NonceExpired = ("NONCE_EXPIRED", 400),
    NonceReused = ("NONCE_REUSED", 400),
    ContextMismatch = ("CONTEXT_MISMATCH", 403),
    SignatureProofInvalid = ("SIGNATURE_PROOF_INVALID", 403),
    RangeLowInvalid = ("RANGE_LOW_INVALID", 403),
    RangeHighInvalid = ("RANGE_HIGH_INVALID", 403),
    BandOutsideManagedRange = ("BAND_OUTSIDE_MANAGED_RANGE", 403),
    BandConflictIu = ("BAND_CONFLICT_IU", 409),
    OutOfAuthorization = ("OUT_OF_AUTHORIZATION", 403),
    LoginFailed = ("LOGIN_FAILED", 401),
    SessionExpired = ("SESSION_EXPIRED", 401),
    StoreUnavailable = ("STORE_UNAVAILABLE", 503),
    UpstreamUnavailable = ("UPSTREAM_UNAVAILABLE", 502),
    Internal = ("INTERNAL", 500),
}

impl std::fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<Denied> for ErrorCode {
    fn from(d: Denied) -> Self {
        match d {
            Denied::NonceUnknown => ErrorCode::NonceUnknown,
            Denied::NonceExpired => ErrorCode::NonceExpired,
            Denied::NonceReused => ErrorCode::NonceReused,
            Denied::Rejected(RejectReason::ContextMismatch) => ErrorCode::ContextMismatch,
            Denied::Rejected(RejectReason::SignatureProofInvalid) => {
                ErrorCode::SignatureProofInvalid
            }
            Denied::Rejected(RejectReason::RangeLowInvalid) => ErrorCode::RangeLowInvalid,
            Denied::Rejected(RejectReason::RangeHighInvalid) => ErrorCode::RangeHighInvalid,
            Denied::BandOutsideManagedRange => ErrorCode::BandOutsideManagedRange,
            Denied::BandConflictIu => ErrorCode::BandConflictIu,
            Denied::StoreUnavailable => ErrorCode::StoreUnavailable,
        }
    }
}

/// Issuance-side mapping of core errors.
impl From<&Error> for ErrorCode {
    fn from(e: &Error) -> Self {
        match e {
            Error::AuthFailed => ErrorCode::AuthFailed,
            Error::NotRegistered(_) => ErrorCode::NotRegistered,
            Error::IssuanceNonce => ErrorCode::NonceRejected,
            Error::ProofOfKnowledge => ErrorCode::ProofInvalid,
            Error::OutOfAuthorization => ErrorCode::OutOfAuthorization,
            Error::Decode(_)
            | Error::Truncated
            | Error::FormatTag(_)
            | Error::LengthMismatch { .. }
            | Error::Schema(_)
            | Error::InvalidRequest(_)
            | Error::BadIndex(_) => ErrorCode::MalformedRequest,
            _ => ErrorCode::Internal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip_and_classes() {
        for c in ErrorCode::ALL {
            assert_eq!(c.as_str().parse::<ErrorCode>(), Ok(*c));
            assert!((400..600).contains(&c.status()));
        }
        assert_eq!(ErrorCode::from(Denied::NonceExpired).as_str(), "NONCE_EXPIRED");
        assert!(ErrorCode::Internal.status() >= 500);
        assert!(ErrorCode::AuthFailed.status() < 500);
    }

    #[test]
    fn denial_codes_mirror_coordinator_names() {
        use Denied::*;
        let all = [
            NonceUnknown,
            NonceExpired,
            NonceReused,
            Rejected(RejectReason::ContextMismatch),
            Rejected(RejectReason::SignatureProofInvalid),
            Rejected(RejectReason::RangeLowInvalid),
            Rejected(RejectReason::RangeHighInvalid),
            BandOutsideManagedRange,
            BandConflictIu,
            StoreUnavailable,
        ];
        for d in all {
            let want = d.as_str().to_ascii_uppercase().replace('-', "_");
            assert_eq!(ErrorCode::from(d).as_str(), want);
        }
    }
}
