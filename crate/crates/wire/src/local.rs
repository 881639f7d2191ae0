//! All three services on loopback in one process, with fresh identities.
//! Used by the integration tests and the benchmark harness.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use iuguard_core::coordinator::{Coordinator, CoordinatorConfig, RecordLog};
use iuguard_core::credential::{Issuer, Registry, MESSAGE_COUNT};
use iuguard_core::crypto::bbs::{keygen, PublicKey};
use iuguard_core::nonce::{NonceStore, DEFAULT_TTL};

use crate::ca::CaService;
use crate::client::{CaClient, Client, IicClient, ScsClient, DEFAULT_TIMEOUT};
use crate::config::{Clients, ConfigError};
use crate::http::{bind, serve, ServerHandle};
use crate::iic::{AccountStore, BaselineAccount, IicService, DEFAULT_SESSION_TTL};
use crate::scs::ScsService;
use crate::tls::{server_config, Identity};

pub struct LocalOptions {
    pub registry: Registry,
    pub issuer_seed: [u8; 32],
    pub ca_nonce_ttl: Duration,
    pub coordinator: CoordinatorConfig,
    /// `None` keeps the record log in memory.
    pub records: Option<PathBuf>,
    pub accounts: Vec<BaselineAccount>,
    pub session_ttl: Duration,
    pub client_timeout: Duration,
}

impl LocalOptions {
    pub fn new(registry: Registry) -> Self {
        Self {
            registry,
            issuer_seed: [7; 32],
            ca_nonce_ttl: DEFAULT_TTL,
            coordinator: CoordinatorConfig::default(),
            records: None,
            accounts: Vec::new(),
            session_ttl: DEFAULT_SESSION_TTL,
            client_timeout: DEFAULT_TIMEOUT,
        }
    }
}

pub struct LocalDeployment {
    pub ca: Arc<CaService>,
    pub scs: Arc<ScsService>,
    pub iic: Arc<IicService>,
    pub issuer_pk: PublicKey,
    /// The identity every local IU client presents.
    pub iu_identity: Identity,
    pub ca_identity: Identity,
    pub scs_identity: Identity,
    pub iic_identity: Identity,
    pub ca_addr: SocketAddr,
    pub scs_addr: SocketAddr,
    pub iic_addr: SocketAddr,
    handles: Vec<ServerHandle>,
    timeout: Duration,
}

fn err(what: &str, e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Load {
        what: what.to_string(),
        reason: e.to_string(),
    }
}

impl LocalDeployment {
    pub async fn start(opts: LocalOptions) -> Result<Self, ConfigError> {
        let loopback: SocketAddr = "127.0.0.1:0".parse().unwrap();
        let gen = |w| Identity::generate().map_err(|e| err(w, e));
        let (iu, ca_id, scs_id, iic_id) = (gen("iu")?, gen("ca")?, gen("scs")?, gen("iic")?);

        let kp = keygen(&opts.issuer_seed, MESSAGE_COUNT).map_err(|e| err("issuer key", e))?;
        let issuer_pk = kp.public_key().clone();
        let issuer = Issuer::new(
            Arc::new(opts.registry),
            kp,
            NonceStore::new(opts.ca_nonce_ttl),
        )
        .map_err(|e| err("issuer", e))?;
        let ca = Arc::new(CaService::new(issuer));
        let ca_tls = server_config(&ca_id, vec![iu.pin()]).map_err(|e| err("ca tls", e))?;
        let ca_h = serve("ca", bind(loopback).await.map_err(|e| err("bind", e))?, ca_tls, ca.clone())
            .map_err(|e| err("ca", e))?;

        let log = match &opts.records {
            Some(p) => RecordLog::open(p).map_err(|e| err("records", e))?,
            None => RecordLog::in_memory(),
        };
        let coordinator = Coordinator::new(opts.coordinator, vec![issuer_pk.clone()], log)
            .map_err(|e| err("coordinator", e))?;
        let scs = Arc::new(ScsService::new(Arc::new(coordinator), vec![iic_id.pin()]));
        let scs_tls = server_config(&scs_id, vec![iu.pin(), iic_id.pin()])
            .map_err(|e| err("scs tls", e))?;
        let scs_h = serve(
            "scs",
            bind(loopback).await.map_err(|e| err("bind", e))?,
            scs_tls,
            scs.clone(),
        )
        .map_err(|e| err("scs", e))?;

        let upstream = Client::new(&iic_id, scs_id.pin(), scs_h.addr(), opts.client_timeout)
            .map_err(|e| err("iic upstream", e))?;
        let accounts = AccountStore::new(opts.accounts).map_err(|e| err("accounts", e))?;
        let iic = Arc::new(IicService::new(accounts, opts.session_ttl, ScsClient(upstream)));
        let iic_tls = server_config(&iic_id, vec![iu.pin()]).map_err(|e| err("iic tls", e))?;
        let iic_h = serve(
            "iic",
            bind(loopback).await.map_err(|e| err("bind", e))?,
            iic_tls,
            iic.clone(),
        )
        .map_err(|e| err("iic", e))?;

        Ok(Self {
            ca,
            scs,
            iic,
            issuer_pk,
            iu_identity: iu,
            ca_identity: ca_id,
            scs_identity: scs_id,
            iic_identity: iic_id,
            ca_addr: ca_h.addr(),
            scs_addr: scs_h.addr(),
            iic_addr: iic_h.addr(),
            handles: vec![ca_h, scs_h, iic_h],
            timeout: opts.client_timeout,
        })
    }

    /// Fresh client handles with their own connection pools.
    pub fn clients(&self) -> Clients {
        let mk = |pin, addr| {
            Client::new(&self.iu_identity, pin, addr, self.timeout).expect("local identities are valid")
        };
        Clients {
            ca: CaClient(mk(self.ca_identity.pin(), self.ca_addr)),
            scs: ScsClient(mk(self.scs_identity.pin(), self.scs_addr)),
            iic: IicClient(mk(self.iic_identity.pin(), self.iic_addr)),
        }
    }

    pub fn coordinator(&self) -> &Arc<Coordinator> {
        self.scs.coordinator()
    }

    pub async fn shutdown(self) {
        for h in self.handles {
            h.shutdown().await;
        }
    }
}
