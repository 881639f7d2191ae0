use thiserror::Error;

/// Errors raised by the primitives and protocol roles in this crate.
///
/// Verification paths never return these for bad proofs; they return
/// `false` or a rejection reason instead. Errors cover misuse, malformed
/// encodings, and issuance-side refusals.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("schema bound violated: {0}")]
    Schema(String),
    #[error("message vector length {got} does not match key length {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value out of range for {bits}-bit proof")]
    OutOfRange { bits: usize },
    #[error("unsupported range proof width {0}")]
    UnsupportedWidth(usize),
    #[error("invalid signature")]
    InvalidSignature,
    #[error("proof of knowledge failed to verify")]
    ProofOfKnowledge,
    #[error("index {0} outside the signed message vector")]
    BadIndex(usize),
    #[error("decode error: {0}")]
    Decode(&'static str),
    #[error("truncated input")]
    Truncated,
    #[error("unsupported format tag {0:#06x}")]
    FormatTag(u16),

    #[error("registry error at line {line}: {reason}")]
    Registry { line: usize, reason: String },
    #[error("identity {0:?} is not registered")]
    NotRegistered(String),
    #[error("enrollment authentication failed")]
    AuthFailed,
    #[error("issuance nonce unknown or already consumed")]
    IssuanceNonce,
    #[error("credential failed integrity check after unblinding")]
    IssuanceIntegrity,
    #[error("holder state does not match the issuance response")]
    HolderStateMismatch,

    #[error("requested band is outside the credential's authorization")]
    OutOfAuthorization,
    #[error("invalid access request: {0}")]
    InvalidRequest(&'static str),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
