pub mod band;
pub mod canonical;
pub mod coordinator;
pub mod credential;
pub mod crypto;
pub mod error;
#[cfg(feature = "test-fixtures")]
pub mod fixtures;
pub mod nonce;
pub mod par;
pub mod presentation;

pub use band::Band;
pub use error::{Error, Result};
