//! Spectrum coordination service.
//!
//! `GET /v1/challenge`, `POST /v1/access`, `GET|DELETE /v1/grants/{id}`, and
//! `POST /v1/access-plain`, which only the baseline IIC's pinned
//! certificate may call.

use std::sync::Arc;
use std::time::Instant;

use hyper::Method;
use iuguard_core::coordinator::{Coordinator, Denied, Grant, GrantId, PreemptionReport};
use iuguard_core::nonce::Nonce;
use iuguard_core::presentation::deserialize_presentation;

use crate::codes::ErrorCode;
use crate::http::{Handler, Reply, Request};
use crate::messages::*;
use crate::tls::Pin;

pub struct ScsService {
    coordinator: Arc<Coordinator>,
    iic_pins: Vec<Pin>,
}

impl ScsService {
    pub fn new(coordinator: Arc<Coordinator>, iic_pins: Vec<Pin>) -> Self {
        Self {
            coordinator,
            iic_pins,
        }
    }

    pub fn coordinator(&self) -> &Arc<Coordinator> {
        &self.coordinator
    }

    fn challenge(&self, req: &Request) -> Reply {
        match self.coordinator.issue_challenge(&req.peer.ip().to_string()) {
            Ok((nonce, expires)) => req.reply(
                kind::CHALLENGE,
                &NonceMsg {
                    nonce: nonce.as_bytes().to_vec(),
                    expires_in_ms: expires.saturating_duration_since(Instant::now()).as_millis()
                        as u64,
                },
            ),
            Err(_) => req.fail(ErrorCode::RateLimited, "too many challenges"),
        }
    }

    fn granted(req: &Request, out: (Grant, PreemptionReport), verify_us: u64) -> Reply {
        req.reply(
            kind::ACCESS_GRANTED,
            &AccessGrantedMsg {
                grant: GrantMsg::from(&out.0),
                preemption: out.1.entries,
                verify_us,
            },
        )
    }

    fn denied(req: &Request, d: Denied) -> Reply {
        req.fail(ErrorCode::from(d), d.as_str())
    }

    async fn access(&self, req: Request) -> Reply {
        let msg: AccessMsg = match req.payload(kind::ACCESS_REQUEST) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let Ok(nonce) = <[u8; 32]>::try_from(msg.nonce.as_slice()).map(Nonce::from_bytes) else {
            return req.fail(ErrorCode::NonceUnknown, "nonce length");
        };
        let pres = match deserialize_presentation(&msg.presentation) {
            Ok(p) => p,
            Err(e) => {
                // Every attempt burns its challenge, parseable or not.
                self.coordinator.burn_nonce(&nonce);
                return req.fail(ErrorCode::MalformedRequest, &format!("presentation: {e}"));
            }
        };
        let coordinator = self.coordinator.clone();
        let request = msg.request;
        let out = tokio::task::spawn_blocking(move || {
            let start = Instant::now();
            let r = coordinator.authorize(&pres, &request, &nonce);
            (r, start.elapsed().as_micros() as u64)
        })
        .await;
        match out {
            Ok((Ok(g), us)) => Self::granted(&req, g, us),
            Ok((Err(d), _)) => Self::denied(&req, d),
            Err(_) => req.fail(ErrorCode::Internal, "verification task failed"),
        }
    }

    fn access_plain(&self, req: &Request) -> Reply {
        if !req.peer_pin.is_some_and(|p| self.iic_pins.contains(&p)) {
            return req.fail(ErrorCode::Forbidden, "plain path is reserved for the IIC");
        }
        let msg: PlainAccessMsg = match req.payload(kind::PLAIN_ACCESS_REQUEST) {
            Ok(m) => m,
            Err(r) => return r,
        };
        if msg.request.validate().is_err() {
            return req.fail(ErrorCode::MalformedRequest, "invalid access request");
        }
        match self.coordinator.authorize_plain(&msg.request) {
            Ok(g) => Self::granted(req, g, 0),
            Err(d) => Self::denied(req, d),
        }
    }

    fn grant(&self, req: &Request, id: &str) -> Reply {
        let Ok(id) = id.parse::<GrantId>() else {
            return req.fail(ErrorCode::NotFound, "no such grant");
        };
        match req.method {
            Method::GET => match self.coordinator.grant(&id) {
                Some(g) => req.reply(kind::GRANT, &GrantMsg::from(&g)),
                None => req.fail(ErrorCode::NotFound, "no such grant"),
            },
            Method::DELETE => {
                if self.coordinator.release(&id) {
                    req.reply(
                        kind::RELEASED,
                        &ReleasedMsg {
                            grant_id: id.to_string(),
                        },
                    )
                } else {
                    req.fail(ErrorCode::NotFound, "no such grant")
                }
            }
            _ => req.fail(ErrorCode::MethodNotAllowed, "method not allowed"),
        }
    }
}

impl Handler for ScsService {
    async fn handle(&self, req: Request) -> Reply {
        let path = req.path.clone();
        if let Some(id) = path.strip_prefix("/v1/grants/") {
            return self.grant(&req, id);
        }
        match (req.method.clone(), path.as_str()) {
            (Method::GET, "/v1/challenge") => self.challenge(&req),
            (Method::POST, "/v1/access") => self.access(req).await,
            (Method::POST, "/v1/access-plain") => self.access_plain(&req),
            (_, "/v1/challenge" | "/v1/access" | "/v1/access-plain") => {
                req.fail(ErrorCode::MethodNotAllowed, "method not allowed")
            }
            _ => req.fail(ErrorCode::NotFound, "no such endpoint"),
        }
    }
}
