//! Network layer: the credential authority, the spectrum coordination
//! service and the baseline IIC over pinned mutual TLS 1.3, plus the client
//! call library.
//!
//! Every body is a canonical JSON [`envelope::Envelope`]. Failures carry a
//! stable [`codes::ErrorCode`].

pub mod ca;
pub mod client;
pub mod codes;
pub mod config;
pub mod envelope;
pub mod http;
pub mod iic;
pub mod local;
pub mod messages;
pub mod scs;
pub mod tls;

pub use client::{CaClient, Client, ClientError, IicClient, ScsClient};
pub use codes::ErrorCode;
pub use envelope::Envelope;
pub use tls::{Identity, Pin};
