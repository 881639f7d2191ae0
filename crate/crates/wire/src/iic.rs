//! Baseline incumbent-informing service: account/password login, then
//! plaintext reports forwarded to the SCS plain-access path.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use hyper::Method;
use iuguard_core::band::Band;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use subtle::ConstantTimeEq;

use crate::client::{ClientError, ScsClient};
use crate::codes::ErrorCode;
use crate::http::{Handler, Reply, Request};
use crate::messages::*;

pub const ACCOUNTS_HEADER: &str = "iuguard-accounts v1";
pub const DEFAULT_ITERATIONS: u32 = 10_000;
pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(900);

#[derive(Debug, thiserror::Error)]
pub enum AccountError {
    #[error("accounts file: {0}")]
    Format(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// A baseline login. Only the salted PBKDF2-SHA256 hash of the password is
/// stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineAccount {
    pub username: String,
    #[serde(with = "hex32")]
    pub salt: [u8; 32],
    #[serde(with = "hex32")]
    pub hash: [u8; 32],
    pub iterations: u32,
    /// Registry identity this login speaks for, and its authorized band.
    pub iu_id: String,
    pub f_low_khz: u32,
    pub f_high_khz: u32,
}

mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let v = hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("expected 32 bytes"))
    }
}

fn pbkdf2(password: &str, salt: &[u8; 32], iterations: u32) -> [u8; 32] {
    let mut out = [0u8; 32];
    pbkdf2::pbkdf2_hmac::<Sha256>(password.as_bytes(), salt, iterations, &mut out);
    out
}

impl BaselineAccount {
    pub fn new(username: &str, password: &str, iu_id: &str, band: Band, iterations: u32) -> Self {
        let mut salt = [0u8; 32];
        rand::rng().fill_bytes(&mut salt);
        Self {
            username: username.to_string(),
            salt,
            hash: pbkdf2(password, &salt, iterations),
            iterations,
            iu_id: iu_id.to_string(),
            f_low_khz: band.f_low_khz,
            f_high_khz: band.f_high_khz,
        }
    }

    pub fn verify(&self, password: &str) -> bool {
        pbkdf2(password, &self.salt, self.iterations)
            .ct_eq(&self.hash)
            .into()
    }

    pub fn band(&self) -> Option<Band> {
        Band::new(self.f_low_khz, self.f_high_khz)
    }
}

#[derive(Clone, Debug, Default)]
pub struct AccountStore {
    accounts: HashMap<String, BaselineAccount>,
}

impl AccountStore {
    pub fn new(accounts: Vec<BaselineAccount>) -> Result<Self, AccountError> {
        let mut map = HashMap::new();
        for a in accounts {
            if a.band().is_none() {
                return Err(AccountError::Format(format!("{}: invalid band", a.username)));
            }
            if a.iterations == 0 {
                return Err(AccountError::Format(format!("{}: zero iterations", a.username)));
            }
            let name = a.username.clone();
            if map.insert(name.clone(), a).is_some() {
                return Err(AccountError::Format(format!("duplicate username {name}")));
            }
        }
        Ok(Self { accounts: map })
    }

    pub fn get(&self, username: &str) -> Option<&BaselineAccount> {
        self.accounts.get(username)
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    /// Header line, then one JSON object per account, sorted by username.
    pub fn to_file_string(&self) -> String {
        let mut names: Vec<_> = self.accounts.keys().collect();
        names.sort();
        let mut out = format!("{ACCOUNTS_HEADER}\n");
        for n in names {
            out.push_str(&serde_json::to_string(&self.accounts[n]).expect("account serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, AccountError> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some(ACCOUNTS_HEADER) {
            return Err(AccountError::Format("missing header".into()));
        }
        let mut accounts = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            accounts.push(
                serde_json::from_str(line)
                    .map_err(|e| AccountError::Format(format!("line {}: {e}", i + 2)))?,
            );
        }
        Self::new(accounts)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, AccountError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AccountError> {
        crate::tls::write_file(path.as_ref(), self.to_file_string().as_bytes(), 0o600)
            .map_err(|e| AccountError::Format(e.to_string()))
    }
}

struct Session {
    username: String,
    expires: Instant,
}

pub struct IicService {
    accounts: Arc<AccountStore>,
    sessions: Mutex<HashMap<String, Session>>,
    session_ttl: Duration,
    scs: ScsClient,
    /// Hashed against on unknown usernames so both failure paths cost the same.
    decoy: BaselineAccount,
}

impl IicService {
    pub fn new(accounts: AccountStore, session_ttl: Duration, scs: ScsClient) -> Self {
        let iterations = accounts
            .accounts
            .values()
            .map(|a| a.iterations)
            .max()
            .unwrap_or(DEFAULT_ITERATIONS);
        let decoy = BaselineAccount {
            username: String::new(),
            salt: [0; 32],
            hash: [0; 32],
            iterations,
            iu_id: String::new(),
            f_low_khz: 0,
            f_high_khz: 1,
        };
        Self {
            accounts: Arc::new(accounts),
            sessions: Mutex::new(HashMap::new()),
            session_ttl,
            scs,
            decoy,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    async fn login(&self, req: &Request) -> Reply {
        let msg: LoginMsg = match req.payload(kind::LOGIN) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let accounts = self.accounts.clone();
        let decoy = self.decoy.clone();
        let username = msg.username.clone();
        let ok = tokio::task::spawn_blocking(move || match accounts.get(&msg.username) {
            Some(a) => a.verify(&msg.password),
            None => {
                let _ = decoy.verify(&msg.password);
                false
            }
        })
        .await
        .unwrap_or(false);
        if !ok {
            return req.fail(ErrorCode::LoginFailed, "login failed");
        }
        let mut token = [0u8; 32];
        rand::rng().fill_bytes(&mut token);
        let token = hex::encode(token);
        let now = Instant::now();
        {
            let mut sessions = self.sessions.lock().unwrap();
            // Amortized sweep, as in the nonce store.
            if sessions.len() >= 4096 && sessions.len().is_power_of_two() {
                sessions.retain(|_, s| s.expires > now);
            }
            sessions.insert(
                token.clone(),
                Session {
                    username,
                    expires: now + self.session_ttl,
                },
            );
        }
        req.reply(
            kind::SESSION,
            &SessionMsg {
                session_token: token,
                expires_in_s: self.session_ttl.as_secs(),
            },
        )
    }

    async fn report(&self, req: &Request) -> Reply {
        let msg: ReportMsg = match req.payload(kind::REPORT) {
            Ok(m) => m,
            Err(r) => return r,
        };
        let username = {
            let sessions = self.sessions.lock().unwrap();
            match sessions.get(&msg.session_token) {
                Some(s) if s.expires > Instant::now() => s.username.clone(),
                _ => return req.fail(ErrorCode::SessionExpired, "session expired or unknown"),
            }
        };
        if msg.request.validate().is_err() {
            return req.fail(ErrorCode::MalformedRequest, "invalid access request");
        }
        let authorized = self
            .accounts
            .get(&username)
            .and_then(BaselineAccount::band)
            .is_some_and(|b| b.contains(&msg.request.band()));
        if !authorized {
            return req.fail(
                ErrorCode::OutOfAuthorization,
                "requested band is outside the account's authorization",
            );
        }
        // Only the operational parameters go upstream; the login stays here.
        match self.scs.access_plain(&msg.request).await {
            Ok(granted) => req.reply(kind::ACCESS_GRANTED, &granted),
            Err(ClientError::Service { code, message, .. }) => {
                match code.parse::<ErrorCode>() {
                    Ok(c) => req.fail(c, &message),
                    Err(()) => req.fail(ErrorCode::UpstreamUnavailable, "unrecognized upstream code"),
                }
            }
            Err(e) => {
                tracing::warn!(error = %e, "scs unreachable");
                req.fail(ErrorCode::UpstreamUnavailable, "coordinator unreachable")
            }
        }
    }
}

impl Handler for IicService {
    async fn handle(&self, req: Request) -> Reply {
        match (req.method.clone(), req.path.as_str()) {
            (Method::POST, "/v1/login") => self.login(&req).await,
            (Method::POST, "/v1/report") => self.report(&req).await,
            (_, "/v1/login" | "/v1/report") => {
                req.fail(ErrorCode::MethodNotAllowed, "method not allowed")
            }
            _ => req.fail(ErrorCode::NotFound, "no such endpoint"),
        }
    }
}
