//! Client call library: pinned mutual TLS, pooled keep-alive connections,
//! correlation-checked envelopes, and typed wrappers per service.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use bytes::Bytes;
use http_body_util::{BodyExt, Full, Limited};
use hyper::client::conn::http1::{self, SendRequest};
use hyper::Method;
use hyper_util::rt::TokioIo;
use iuguard_core::credential::{
    create_credential_request, enrollment_mac, finalize_credential_bytes, Credential,
};
use iuguard_core::crypto::bbs::PublicKey;
use iuguard_core::nonce::Nonce;
use iuguard_core::presentation::{serialize_presentation, AccessRequest, Presentation};
use tokio::net::TcpStream;
use tokio_rustls::TlsConnector;

use crate::codes::ErrorCode;
use crate::envelope::{new_correlation_id, Envelope, ErrorPayload};
use crate::http::{CORRELATION_HEADER, MAX_BODY};
use crate::messages::*;
use crate::tls::{client_config, Identity, Pin, TlsError, SERVER_NAME};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("timed out")]
    Timeout,
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    /// A structured error envelope from the service.
    #[error("{code}: {message}")]
    Service {
        code: String,
        message: String,
        status: u16,
    },
    #[error("local: {0}")]
    Local(String),
}

impl ClientError {
    pub fn code(&self) -> Option<ErrorCode> {
        match self {
            ClientError::Service { code, .. } => code.parse().ok(),
            _ => None,
        }
    }

    pub fn is_transport(&self) -> bool {
        matches!(
            self,
            ClientError::Timeout | ClientError::Handshake(_) | ClientError::Transport(_)
        )
    }
}

impl From<TlsError> for ClientError {
    fn from(e: TlsError) -> Self {
        ClientError::Local(e.to_string())
    }
}

type Sender = SendRequest<Full<Bytes>>;

/// Connection to one service. Clones share the pool.
#[derive(Clone)]
pub struct Client {
    addr: SocketAddr,
    connector: TlsConnector,
    timeout: Duration,
    idle: Arc<Mutex<Vec<Sender>>>,
}

impl Client {
    pub fn new(
        identity: &Identity,
        server_pin: Pin,
        addr: SocketAddr,
        timeout: Duration,
    ) -> Result<Self, ClientError> {
        Ok(Self {
            addr,
            connector: TlsConnector::from(client_config(identity, server_pin)?),
            timeout,
            idle: Arc::new(Mutex::new(Vec::new())),
        })
    }

    /// A client with its own empty pool, sharing this one's configuration.
    pub fn fresh(&self) -> Self {
        Self {
            idle: Arc::new(Mutex::new(Vec::new())),
            ..self.clone()
        }
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    async fn connect(&self) -> Result<Sender, ClientError> {
        let tcp = TcpStream::connect(self.addr)
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let _ = tcp.set_nodelay(true);
        let name = pki_types::ServerName::try_from(SERVER_NAME).expect("static name is valid");
        let tls = self
            .connector
            .connect(name, tcp)
            .await
            .map_err(|e| ClientError::Handshake(e.to_string()))?;
        let (sender, conn) = http1::handshake(TokioIo::new(tls))
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        tokio::spawn(async move {
            let _ = conn.await;
        });
        Ok(sender)
    }

    async fn sender(&self) -> Result<Sender, ClientError> {
        loop {
            let cached = self.idle.lock().unwrap().pop();
            match cached {
                Some(mut s) if !s.is_closed() => {
                    if s.ready().await.is_ok() {
                        return Ok(s);
                    }
                }
                Some(_) => continue,
                None => return self.connect().await,
            }
        }
    }

    /// One request/response exchange. A body-less call (GET, DELETE) sends
    /// its correlation id in a header.
    pub async fn call(
        &self,
        method: Method,
        path: &str,
        body: Option<&Envelope>,
    ) -> Result<Envelope, ClientError> {
        match tokio::time::timeout(self.timeout, self.exchange(method, path, body)).await {
            Ok(r) => r,
            Err(_) => Err(ClientError::Timeout),
        }
    }

    async fn exchange(
        &self,
        method: Method,
        path: &str,
        body: Option<&Envelope>,
    ) -> Result<Envelope, ClientError> {
        let correlation_id = body
            .map(|e| e.correlation_id.clone())
            .unwrap_or_else(new_correlation_id);
        let bytes = body.map(Envelope::to_bytes).unwrap_or_default();
        let req = hyper::Request::builder()
            .method(method)
            .uri(path)
            .header(hyper::header::HOST, SERVER_NAME)
            .header(hyper::header::CONTENT_TYPE, "application/json")
            .header(CORRELATION_HEADER, &correlation_id)
            .body(Full::new(Bytes::from(bytes)))
            .map_err(|e| ClientError::Local(e.to_string()))?;
        let mut sender = self.sender().await?;
        let resp = sender
            .send_request(req)
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let body = Limited::new(resp.into_body(), MAX_BODY)
            .collect()
            .await
            .map_err(|e| ClientError::Transport(e.to_string()))?
            .to_bytes();
        self.idle.lock().unwrap().push(sender);
        let env = Envelope::from_bytes(&body).map_err(|e| ClientError::Malformed(e.to_string()))?;
        if env.correlation_id != correlation_id {
            return Err(ClientError::Malformed("correlation id mismatch".into()));
        }
        if env.is_error() {
            let p: ErrorPayload = env
                .expect(crate::envelope::ERROR_TYPE)
                .map_err(|e| ClientError::Malformed(e.to_string()))?;
            return Err(ClientError::Service {
                code: p.code,
                message: p.message,
                status,
            });
        }
        if status != 200 {
            return Err(ClientError::Malformed(format!("status {status} without error envelope")));
        }
        Ok(env)
    }

    pub async fn call_typed<T: serde::de::DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        body: Option<&Envelope>,
        kind: &str,
    ) -> Result<T, ClientError> {
        self.call(method, path, body)
            .await?
            .expect(kind)
            .map_err(|e| ClientError::Malformed(e.to_string()))
    }

    pub async fn echo(&self, payload: &serde_json::Value) -> Result<Envelope, ClientError> {
        let env = Envelope::new(kind::ECHO, payload);
        self.call(Method::POST, "/v1/echo", Some(&env)).await
    }
}

fn nonce_from(bytes: &[u8]) -> Result<Nonce, ClientError> {
    let arr: [u8; 32] = bytes
        .try_into()
        .map_err(|_| ClientError::Malformed("nonce length".into()))?;
    Ok(Nonce::from_bytes(arr))
}

/// Credential authority endpoints.
#[derive(Clone)]
pub struct CaClient(pub Client);

impl CaClient {
    pub async fn nonce(&self) -> Result<Nonce, ClientError> {
        let env = Envelope::new(kind::NONCE_REQUEST, &Empty {});
        let m: NonceMsg = self
            .0
            .call_typed(Method::POST, "/v1/nonce", Some(&env), kind::NONCE)
            .await?;
        nonce_from(&m.nonce)
    }

    /// Full blind issuance: nonce, request, finalize.
    pub async fn issue(
        &self,
        pk: &PublicKey,
        iu_id: &str,
        enrollment_secret: &[u8; 32],
    ) -> Result<Credential, ClientError> {
        let nonce = self.nonce().await?;
        let (req, state) =
            create_credential_request(pk, iu_id, enrollment_secret, &nonce, &mut rand::rng());
        let env = Envelope::new(
            kind::CREDENTIAL_REQUEST,
            &CredentialRequestMsg {
                request: req.to_bytes(),
            },
        );
        let m: IssuanceResponseMsg = self
            .0
            .call_typed(Method::POST, "/v1/credentials", Some(&env), kind::ISSUANCE_RESPONSE)
            .await?;
        finalize_credential_bytes(pk, &m.response, &state)
            .map_err(|e| ClientError::Malformed(e.to_string()))
    }

    /// Baseline issuance: the same authentication, returning the plaintext
    /// registry profile instead of a signed credential.
    pub async fn issue_baseline(
        &self,
        iu_id: &str,
        enrollment_secret: &[u8; 32],
    ) -> Result<BaselineProfileMsg, ClientError> {
        let nonce = self.nonce().await?;
        let env = Envelope::new(
            kind::BASELINE_ENROLLMENT,
            &BaselineEnrollmentMsg {
                iu_id: iu_id.to_string(),
                nonce: nonce.as_bytes().to_vec(),
                enrollment_mac: enrollment_mac(enrollment_secret, &nonce, iu_id).to_vec(),
            },
        );
        self.0
            .call_typed(Method::POST, "/v1/credentials", Some(&env), kind::BASELINE_PROFILE)
            .await
    }
}

/// Spectrum coordination endpoints.
#[derive(Clone)]
pub struct ScsClient(pub Client);

impl ScsClient {
    pub async fn challenge(&self) -> Result<Nonce, ClientError> {
        let m: NonceMsg = self
            .0
            .call_typed(Method::GET, "/v1/challenge", None, kind::CHALLENGE)
            .await?;
        nonce_from(&m.nonce)
    }

    pub async fn access(
        &self,
        pres: &Presentation,
        req: &AccessRequest,
        nonce: &Nonce,
    ) -> Result<AccessGrantedMsg, ClientError> {
        self.access_raw(serialize_presentation(pres), req, nonce).await
    }

    /// Sends presentation bytes as given; lets tests submit damaged ones.
    pub async fn access_raw(
        &self,
        presentation: Vec<u8>,
        req: &AccessRequest,
        nonce: &Nonce,
    ) -> Result<AccessGrantedMsg, ClientError> {
        let env = Envelope::new(
            kind::ACCESS_REQUEST,
            &AccessMsg {
                presentation,
                request: *req,
                nonce: nonce.as_bytes().to_vec(),
            },
        );
        self.0
            .call_typed(Method::POST, "/v1/access", Some(&env), kind::ACCESS_GRANTED)
            .await
    }

    pub async fn access_plain(&self, req: &AccessRequest) -> Result<AccessGrantedMsg, ClientError> {
        let env = Envelope::new(kind::PLAIN_ACCESS_REQUEST, &PlainAccessMsg { request: *req });
        self.0
            .call_typed(Method::POST, "/v1/access-plain", Some(&env), kind::ACCESS_GRANTED)
            .await
    }

    pub async fn grant(&self, id: &str) -> Result<GrantMsg, ClientError> {
        self.0
            .call_typed(Method::GET, &format!("/v1/grants/{id}"), None, kind::GRANT)
            .await
    }

    pub async fn release(&self, id: &str) -> Result<(), ClientError> {
        let _: ReleasedMsg = self
            .0
            .call_typed(Method::DELETE, &format!("/v1/grants/{id}"), None, kind::RELEASED)
            .await?;
        Ok(())
    }
}

/// Baseline incumbent-informing endpoints.
#[derive(Clone)]
pub struct IicClient(pub Client);

impl IicClient {
    pub async fn login(&self, username: &str, password: &str) -> Result<SessionMsg, ClientError> {
        let env = Envelope::new(
            kind::LOGIN,
            &LoginMsg {
                username: username.to_string(),
                password: password.to_string(),
            },
        );
        self.0
            .call_typed(Method::POST, "/v1/login", Some(&env), kind::SESSION)
            .await
    }

    pub async fn report(
        &self,
        session_token: &str,
        req: &AccessRequest,
    ) -> Result<AccessGrantedMsg, ClientError> {
        let env = Envelope::new(
            kind::REPORT,
            &ReportMsg {
                session_token: session_token.to_string(),
                request: *req,
            },
        );
        self.0
            .call_typed(Method::POST, "/v1/report", Some(&env), kind::ACCESS_GRANTED)
            .await
    }
}
