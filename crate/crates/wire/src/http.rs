//! Shared server loop: TLS accept, HTTP/1.1, envelope framing, logging.

use std::future::Future;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bytes::Bytes;
use http_body_util::{BodyExt, Full, Limited};
use hyper::body::Incoming;
use hyper::server::conn::http1;
use hyper::service::service_fn;
use hyper::{Method, StatusCode};
use hyper_util::rt::TokioIo;
use rustls::ServerConfig;
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;
use tokio_rustls::TlsAcceptor;

use crate::codes::ErrorCode;
use crate::envelope::{new_correlation_id, Envelope};
use crate::messages::kind;
use crate::tls::Pin;

pub const MAX_BODY: usize = 1 << 20;
pub const CORRELATION_HEADER: &str = "x-correlation-id";
const HANDSHAKE_TIMEOUT: Duration = Duration::from_secs(10);

/// A decoded request as seen by a service.
#[derive(Debug)]
pub struct Request {
    pub method: Method,
    pub path: String,
    /// `None` for bodiless requests.
    pub envelope: Option<Envelope>,
    pub correlation_id: String,
    pub peer: SocketAddr,
    pub peer_pin: Option<Pin>,
}

impl Request {
    pub fn reply<T: serde::Serialize>(&self, kind: &str, payload: &T) -> Reply {
        Reply::ok(Envelope::with_id(self.correlation_id.clone(), kind, payload))
    }

    pub fn fail(&self, code: ErrorCode, message: &str) -> Reply {
        Reply::error(self.correlation_id.clone(), code, message)
    }

    /// The request envelope, checked to be of type `kind`.
    pub fn payload<T: serde::de::DeserializeOwned>(&self, kind: &str) -> Result<T, Reply> {
        let env = self
            .envelope
            .as_ref()
            .ok_or_else(|| self.fail(ErrorCode::MalformedEnvelope, "missing body"))?;
        env.expect(kind)
            .map_err(|e| self.fail(ErrorCode::MalformedRequest, &e.to_string()))
    }
}

#[derive(Debug)]
pub struct Reply {
    pub status: u16,
    pub envelope: Envelope,
}

impl Reply {
    pub fn ok(envelope: Envelope) -> Self {
        Self {
            status: 200,
            envelope,
        }
    }

    pub fn error(correlation_id: String, code: ErrorCode, message: &str) -> Self {
        Self {
            status: code.status(),
            envelope: Envelope::error(correlation_id, code, message),
        }
    }
}

pub trait Handler: Send + Sync + 'static {
    fn handle(&self, req: Request) -> impl Future<Output = Reply> + Send;
}

/// A running server. Dropping the handle does not stop it; call `shutdown`.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: watch::Sender<bool>,
    task: JoinHandle<()>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        let _ = self.task.await;
    }

    /// Waits until the accept loop ends (only after `shutdown`).
    pub async fn wait(self) {
        let _ = self.task.await;
    }
}

pub async fn bind(addr: SocketAddr) -> std::io::Result<TcpListener> {
    let sock = if addr.is_ipv4() {
        tokio::net::TcpSocket::new_v4()?
    } else {
        tokio::net::TcpSocket::new_v6()?
    };
    sock.set_reuseaddr(true)?;
    sock.bind(addr)?;
    sock.listen(4096)
}

pub fn serve<H: Handler>(
    name: &'static str,
    listener: TcpListener,
    tls: Arc<ServerConfig>,
    handler: Arc<H>,
) -> std::io::Result<ServerHandle> {
    let addr = listener.local_addr()?;
    let (stop, mut stopped) = watch::channel(false);
    let acceptor = TlsAcceptor::from(tls);
    let task = tokio::spawn(async move {
        tracing::info!(service = name, %addr, "listening");
        loop {
            let (tcp, peer) = tokio::select! {
                r = listener.accept() => match r {
                    Ok(x) => x,
                    Err(e) => {
                        tracing::warn!(service = name, error = %e, "accept failed");
                        tokio::time::sleep(Duration::from_millis(10)).await;
                        continue;
                    }
                },
                _ = stopped.changed() => break,
            };
            let _ = tcp.set_nodelay(true);
            let acceptor = acceptor.clone();
            let handler = handler.clone();
            let mut conn_stop = stopped.clone();
            tokio::spawn(async move {
                let tls = match tokio::time::timeout(HANDSHAKE_TIMEOUT, acceptor.accept(tcp)).await {
                    Ok(Ok(s)) => s,
                    Ok(Err(e)) => {
                        tracing::info!(service = name, error = %e, "handshake rejected");
                        return;
                    }
                    Err(_) => return,
                };
                let peer_pin = tls
                    .get_ref()
                    .1
                    .peer_certificates()
                    .and_then(|c| c.first())
                    .map(Pin::of);
                let svc = service_fn(move |req| {
                    let handler = handler.clone();
                    async move {
                        Ok::<_, std::convert::Infallible>(
                            dispatch(name, &*handler, req, peer, peer_pin).await,
                        )
                    }
                });
                let conn = http1::Builder::new()
                    .keep_alive(true)
                    .serve_connection(TokioIo::new(tls), svc);
                tokio::pin!(conn);
                tokio::select! {
                    _ = conn.as_mut() => {}
                    _ = conn_stop.changed() => {
                        conn.as_mut().graceful_shutdown();
                        let _ = conn.await;
                    }
                }
            });
        }
    });
    Ok(ServerHandle { addr, stop, task })
}

async fn dispatch<H: Handler>(
    name: &'static str,
    handler: &H,
    req: hyper::Request<Incoming>,
    peer: SocketAddr,
    peer_pin: Option<Pin>,
) -> hyper::Response<Full<Bytes>> {
    let start = Instant::now();
    let method = req.method().clone();
    let path = req.uri().path().to_string();
    let header_id = req
        .headers()
        .get(CORRELATION_HEADER)
        .and_then(|v| v.to_str().ok())
        .filter(|s| !s.is_empty() && s.len() <= 64)
        .map(str::to_string);
    let body = Limited::new(req.into_body(), MAX_BODY).collect().await;
    let reply = match body {
        Err(_) => Reply::error(
            header_id.unwrap_or_else(new_correlation_id),
            ErrorCode::MalformedEnvelope,
            "body unreadable or too large",
        ),
        Ok(b) => {
            let bytes = b.to_bytes();
            let envelope = if bytes.is_empty() {
                Ok(None)
            } else {
                Envelope::from_bytes(&bytes).map(Some)
            };
            match envelope {
                Err(e) => Reply::error(
                    header_id.unwrap_or_else(new_correlation_id),
                    ErrorCode::MalformedEnvelope,
                    &e.to_string(),
                ),
                Ok(envelope) => {
                    let correlation_id = envelope
                        .as_ref()
                        .map(|e| e.correlation_id.clone())
                        .or(header_id)
                        .unwrap_or_else(new_correlation_id);
                    let r = Request {
                        method: method.clone(),
                        path: path.clone(),
                        envelope,
                        correlation_id,
                        peer,
                        peer_pin,
                    };
                    if r.path == "/v1/echo" && r.method == Method::POST {
                        match &r.envelope {
                            Some(e) => r.reply(kind::ECHO, &e.payload),
                            None => r.fail(ErrorCode::MalformedEnvelope, "missing body"),
                        }
                    } else {
                        handler.handle(r).await
                    }
                }
            }
        }
    };
    // Method, route and outcome only: bodies never reach the log.
    tracing::info!(
        service = name,
        method = %method,
        route = route_label(&path),
        status = reply.status,
        elapsed_us = start.elapsed().as_micros() as u64,
        "request"
    );
    let mut resp = hyper::Response::new(Full::new(Bytes::from(reply.envelope.to_bytes())));
    *resp.status_mut() = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    resp.headers_mut().insert(
        hyper::header::CONTENT_TYPE,
        hyper::header::HeaderValue::from_static("application/json"),
    );
    resp
}

/// Path with identifiers collapsed, for logs.
fn route_label(path: &str) -> &str {
    if path.starts_with("/v1/grants/") {
        "/v1/grants/{id}"
    } else {
        match path {
            "/v1/nonce" | "/v1/credentials" | "/v1/challenge" | "/v1/access" | "/v1/access-plain"
            | "/v1/login" | "/v1/report" | "/v1/echo" => path,
            _ => "other",
        }
    }
}
