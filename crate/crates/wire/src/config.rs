//! Deployment configuration: one TOML file with `[ca]`, `[scs]`, `[iic]` and
//! `[client]` sections. Relative paths resolve against the file's directory.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use iuguard_core::band::Band;
use iuguard_core::coordinator::{
    Coordinator, CoordinatorConfig, RateLimit, RecordLog, CBRS_BAND, DEFAULT_CHANNEL_WIDTH_KHZ,
};
use iuguard_core::credential::issuers::load_issuers;
use iuguard_core::credential::{load_registry, Issuer, MESSAGE_COUNT};
use iuguard_core::crypto::bbs::{keygen, SignerKeyPair};
use iuguard_core::nonce::NonceStore;
use serde::{Deserialize, Serialize};

use crate::ca::CaService;
use crate::client::{CaClient, Client, IicClient, ScsClient};
use crate::http::{bind, serve, ServerHandle};
use crate::iic::{AccountStore, IicService};
use crate::scs::ScsService;
use crate::tls::{server_config, Identity, Pin};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("{what}: {reason}")]
    Load { what: String, reason: String },
    #[error("bind {addr}: {reason}")]
    Bind { addr: SocketAddr, reason: String },
}

fn load_err(what: impl std::fmt::Display, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Load {
        what: what.to_string(),
        reason: e.to_string(),
    }
}

fn default_nonce_ttl() -> u64 {
    60
}
fn default_width() -> u32 {
    DEFAULT_CHANNEL_WIDTH_KHZ
}
fn default_cap() -> u32 {
    3600
}
fn default_burst() -> u32 {
    RateLimit::default().burst
}
fn default_rate() -> f64 {
    RateLimit::default().per_second
}
fn default_low() -> u32 {
    CBRS_BAND.f_low_khz
}
fn default_high() -> u32 {
    CBRS_BAND.f_high_khz
}
fn default_session_ttl() -> u64 {
    900
}
fn default_timeout() -> u64 {
    30_000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaConfig {
    pub listen: SocketAddr,
    pub cert: PathBuf,
    pub key: PathBuf,
    /// Hex-encoded 32-byte key generation seed.
    pub signing_seed: PathBuf,
    pub registry: PathBuf,
    #[serde(default = "default_nonce_ttl")]
    pub nonce_ttl_s: u64,
    #[serde(default)]
    pub client_pins: Vec<Pin>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScsConfig {
    pub listen: SocketAddr,
    pub cert: PathBuf,
    pub key: PathBuf,
    pub issuers: PathBuf,
    pub records: PathBuf,
    #[serde(default = "default_low")]
    pub managed_low_khz: u32,
    #[serde(default = "default_high")]
    pub managed_high_khz: u32,
    #[serde(default = "default_width")]
    pub channel_width_khz: u32,
    #[serde(default = "default_cap")]
    pub grant_cap_s: u32,
    #[serde(default = "default_nonce_ttl")]
    pub nonce_ttl_s: u64,
    #[serde(default = "default_burst")]
    pub rate_burst: u32,
    #[serde(default = "default_rate")]
    pub rate_per_second: f64,
    #[serde(default)]
    pub client_pins: Vec<Pin>,
    /// Certificates allowed on the plain-access path.
    #[serde(default)]
    pub iic_pins: Vec<Pin>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IicConfig {
    pub listen: SocketAddr,
    pub cert: PathBuf,
    pub key: PathBuf,
    pub accounts: PathBuf,
    #[serde(default = "default_session_ttl")]
    pub session_ttl_s: u64,
    pub scs_addr: SocketAddr,
    pub scs_pin: Pin,
    #[serde(default)]
    pub client_pins: Vec<Pin>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientConfig {
    pub cert: PathBuf,
    pub key: PathBuf,
    pub ca_addr: SocketAddr,
    pub ca_pin: Pin,
    pub scs_addr: SocketAddr,
    pub scs_pin: Pin,
    pub iic_addr: SocketAddr,
    pub iic_pin: Pin,
    /// Issuer key list the client checks finalized credentials against.
    pub issuers: PathBuf,
    /// Per-IU enrollment secrets (`<iu_id>.secret`, hex) and baseline
    /// passwords (`<iu_id>.password`).
    pub secrets_dir: PathBuf,
    /// Where `issue` stores credentials (`<iu_id>.cred`).
    pub credentials_dir: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub ca: CaConfig,
    pub scs: ScsConfig,
    pub iic: IicConfig,
    pub client: ClientConfig,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: "<inline>".into(),
            reason: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut cfg: Config = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [
            &mut self.ca.cert,
            &mut self.ca.key,
            &mut self.ca.signing_seed,
            &mut self.ca.registry,
            &mut self.scs.cert,
            &mut self.scs.key,
            &mut self.scs.issuers,
            &mut self.scs.records,
            &mut self.iic.cert,
            &mut self.iic.key,
            &mut self.iic.accounts,
            &mut self.client.cert,
            &mut self.client.key,
            &mut self.client.issuers,
            &mut self.client.secrets_dir,
            &mut self.client.credentials_dir,
        ] {
            resolve(base, p);
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

pub fn read_seed(path: &Path) -> Result<[u8; 32], ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| load_err(path.display(), e))?;
    let v = hex::decode(text.trim()).map_err(|e| load_err(path.display(), e))?;
    v.try_into()
        .map_err(|_| load_err(path.display(), "seed must be 32 bytes"))
}

pub fn signing_key(cfg: &CaConfig) -> Result<SignerKeyPair, ConfigError> {
    keygen(&read_seed(&cfg.signing_seed)?, MESSAGE_COUNT).map_err(|e| load_err("signing key", e))
}

async fn listen(addr: SocketAddr) -> Result<tokio::net::TcpListener, ConfigError> {
    bind(addr).await.map_err(|e| ConfigError::Bind {
        addr,
        reason: e.to_string(),
    })
}

pub async fn start_ca(cfg: &CaConfig) -> Result<(ServerHandle, Arc<CaService>), ConfigError> {
    let id = Identity::load(&cfg.cert, &cfg.key).map_err(|e| load_err("ca identity", e))?;
    let registry = load_registry(&cfg.registry).map_err(|e| load_err("registry", e))?;
    let issuer = Issuer::new(
        Arc::new(registry),
        signing_key(cfg)?,
        NonceStore::new(Duration::from_secs(cfg.nonce_ttl_s)),
    )
    .map_err(|e| load_err("issuer", e))?;
    let tls = server_config(&id, cfg.client_pins.clone()).map_err(|e| load_err("ca tls", e))?;
    let svc = Arc::new(CaService::new(issuer));
    let h = serve("ca", listen(cfg.listen).await?, tls, svc.clone())
        .map_err(|e| load_err("ca", e))?;
    Ok((h, svc))
}

pub fn coordinator_config(cfg: &ScsConfig) -> Result<CoordinatorConfig, ConfigError> {
    Ok(CoordinatorConfig {
        managed: Band::new(cfg.managed_low_khz, cfg.managed_high_khz)
            .ok_or_else(|| load_err("scs", "managed band is empty"))?,
        channel_width_khz: cfg.channel_width_khz,
        grant_cap_s: cfg.grant_cap_s,
        nonce_ttl: Duration::from_secs(cfg.nonce_ttl_s),
        rate_limit: RateLimit {
            burst: cfg.rate_burst,
            per_second: cfg.rate_per_second,
        },
    })
}

pub async fn start_scs(cfg: &ScsConfig) -> Result<(ServerHandle, Arc<ScsService>), ConfigError> {
    let id = Identity::load(&cfg.cert, &cfg.key).map_err(|e| load_err("scs identity", e))?;
    let issuers = load_issuers(&cfg.issuers).map_err(|e| load_err("issuers", e))?;
    let log = RecordLog::open(&cfg.records).map_err(|e| load_err("records", e))?;
    let coordinator = Coordinator::new(coordinator_config(cfg)?, issuers, log)
        .map_err(|e| load_err("coordinator", e))?;
    let mut pins = cfg.client_pins.clone();
    pins.extend(cfg.iic_pins.iter().copied());
    let tls = server_config(&id, pins).map_err(|e| load_err("scs tls", e))?;
    let svc = Arc::new(ScsService::new(Arc::new(coordinator), cfg.iic_pins.clone()));
    let h = serve("scs", listen(cfg.listen).await?, tls, svc.clone())
        .map_err(|e| load_err("scs", e))?;
    Ok((h, svc))
}

pub async fn start_iic(cfg: &IicConfig) -> Result<(ServerHandle, Arc<IicService>), ConfigError> {
    let id = Identity::load(&cfg.cert, &cfg.key).map_err(|e| load_err("iic identity", e))?;
    let accounts = AccountStore::load(&cfg.accounts).map_err(|e| load_err("accounts", e))?;
    let upstream = Client::new(&id, cfg.scs_pin, cfg.scs_addr, Duration::from_secs(30))
        .map_err(|e| load_err("iic upstream", e))?;
    let tls = server_config(&id, cfg.client_pins.clone()).map_err(|e| load_err("iic tls", e))?;
    let svc = Arc::new(IicService::new(
        accounts,
        Duration::from_secs(cfg.session_ttl_s),
        ScsClient(upstream),
    ));
    let h = serve("iic", listen(cfg.listen).await?, tls, svc.clone())
        .map_err(|e| load_err("iic", e))?;
    Ok((h, svc))
}

/// Client handles for the three services, sharing one identity.
#[derive(Clone)]
pub struct Clients {
    pub ca: CaClient,
    pub scs: ScsClient,
    pub iic: IicClient,
}

impl ClientConfig {
    pub fn connect(&self) -> Result<Clients, ConfigError> {
        let id = Identity::load(&self.cert, &self.key).map_err(|e| load_err("client identity", e))?;
        let t = Duration::from_millis(self.timeout_ms);
        let mk = |pin, addr| Client::new(&id, pin, addr, t).map_err(|e| load_err("client", e));
        Ok(Clients {
            ca: CaClient(mk(self.ca_pin, self.ca_addr)?),
            scs: ScsClient(mk(self.scs_pin, self.scs_addr)?),
            iic: IicClient(mk(self.iic_pin, self.iic_addr)?),
        })
    }
}
