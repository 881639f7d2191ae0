//! Credential authority service: `POST /v1/nonce`, `POST /v1/credentials`.

use std::sync::Arc;

use hyper::Method;
use iuguard_core::credential::{enrollment_mac, issue_credential, CredentialRequest, Issuer};
use iuguard_core::nonce::Nonce;
use subtle::ConstantTimeEq;

use crate::codes::ErrorCode;
use crate::http::{Handler, Reply, Request};
use crate::messages::*;

pub struct CaService {
    issuer: Arc<Issuer>,
}

impl CaService {
    pub fn new(issuer: Issuer) -> Self {
        Self {
            issuer: Arc::new(issuer),
        }
    }

    pub fn issuer(&self) -> &Issuer {
        &self.issuer
    }

    fn nonce(&self, req: &Request) -> Reply {
        let (nonce, expires) = self.issuer.nonces().issue(&mut rand::rng());
        req.reply(
            kind::NONCE,
            &NonceMsg {
                nonce: nonce.as_bytes().to_vec(),
                expires_in_ms: expires
                    .saturating_duration_since(std::time::Instant::now())
                    .as_millis() as u64,
            },
        )
    }

    async fn credentials(&self, req: Request) -> Reply {
        let kind_tag = req.envelope.as_ref().map(|e| e.kind.as_str());
        if kind_tag == Some(kind::BASELINE_ENROLLMENT) {
            return self.baseline(&req);
        }
        let msg: CredentialRequestMsg = match req.payload(kind::CREDENTIAL_REQUEST) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let cr = match CredentialRequest::from_bytes(&msg.request) {
            Ok(c) => c,
            Err(e) => return req.fail(ErrorCode::MalformedRequest, &e.to_string()),
        };
        let issuer = self.issuer.clone();
        let out =
            tokio::task::spawn_blocking(move || issue_credential(&issuer, &cr, &mut rand::rng()))
                .await;
        match out {
            Ok(Ok(resp)) => req.reply(
                kind::ISSUANCE_RESPONSE,
                &IssuanceResponseMsg {
                    response: resp.to_bytes(),
                },
            ),
            Ok(Err(e)) => req.fail(ErrorCode::from(&e), &e.to_string()),
            Err(_) => req.fail(ErrorCode::Internal, "issuance task failed"),
        }
    }

    /// Same nonce and MAC checks as blind issuance; the reply is the
    /// registry profile in the clear.
    fn baseline(&self, req: &Request) -> Reply {
        let msg: BaselineEnrollmentMsg = match req.payload(kind::BASELINE_ENROLLMENT) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let Ok(nonce) = <[u8; 32]>::try_from(msg.nonce.as_slice()).map(Nonce::from_bytes) else {
            return req.fail(ErrorCode::MalformedRequest, "nonce length");
        };
        if self.issuer.nonces().consume(&nonce).is_err() {
            return req.fail(ErrorCode::NonceRejected, "issuance nonce rejected");
        }
        let Some(record) = self.issuer.registry().get(&msg.iu_id) else {
            return req.fail(ErrorCode::NotRegistered, "not registered");
        };
        let expect = enrollment_mac(&record.enrollment_secret, &nonce, &msg.iu_id);
        if !bool::from(expect.as_slice().ct_eq(&msg.enrollment_mac)) {
            return req.fail(ErrorCode::AuthFailed, "enrollment authentication failed");
        }
        let band = record.band();
        req.reply(
            kind::BASELINE_PROFILE,
            &BaselineProfileMsg {
                iu_id: record.iu_id.clone(),
                f_low_khz: band.f_low_khz,
                f_high_khz: band.f_high_khz,
            },
        )
    }
}

impl Handler for CaService {
    async fn handle(&self, req: Request) -> Reply {
        match (req.method.clone(), req.path.as_str()) {
            (Method::POST, "/v1/nonce") => self.nonce(&req),
            (Method::POST, "/v1/credentials") => self.credentials(req).await,
            (_, "/v1/nonce" | "/v1/credentials") => {
                req.fail(ErrorCode::MethodNotAllowed, "method not allowed")
            }
            _ => req.fail(ErrorCode::NotFound, "no such endpoint"),
        }
    }
}
