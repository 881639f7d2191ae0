//! Spectrum coordination: challenges, authorization, preemption, grant
//! lifecycle and minimal-record retention.
//!
//! Presentation verification runs without holding any lock. Every mutation
//! of the channel map, the grant table and the record log goes through one
//! mutex, so the success path of `authorize` and expiry are linearized.

mod db;
mod limiter;
mod records;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Mutex;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;

use crate::band::Band;
use crate::crypto::bbs::PublicKey;
use crate::error::Result;
use crate::nonce::{Nonce, NonceError, NonceStore};
use crate::presentation::{
    verify_presentation, AccessRequest, Location, Presentation, RejectReason, TimeWindow, Verdict,
};

pub use db::{
    preempt_overlapping, ChannelEntry, GrantId, Occupant, Preemption, PreemptionReport,
    SpectrumDatabase, Tier,
};
pub use limiter::{RateLimit, RateLimiter};
pub use records::{parse_records, MinimalRecord, RecordLog, RECORDS_HEADER};

/// CBRS: 3.55–3.70 GHz.
pub const CBRS_BAND: Band = Band {
    f_low_khz: 3_550_000,
    f_high_khz: 3_700_000,
};
pub const DEFAULT_CHANNEL_WIDTH_KHZ: u32 = 10_000;

#[derive(Clone, Debug)]
pub struct CoordinatorConfig {
    pub managed: Band,
    pub channel_width_khz: u32,
    /// Upper bound on a grant's lifetime regardless of the requested window.
    pub grant_cap_s: u32,
    pub nonce_ttl: Duration,
    pub rate_limit: RateLimit,
}

impl Default for CoordinatorConfig {
    fn default() -> Self {
        Self {
            managed: CBRS_BAND,
            channel_width_khz: DEFAULT_CHANNEL_WIDTH_KHZ,
            grant_cap_s: 3600,
            nonce_ttl: crate::nonce::DEFAULT_TTL,
            rate_limit: RateLimit::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Denied {
    NonceUnknown,
    NonceExpired,
    NonceReused,
    Rejected(RejectReason),
    BandOutsideManagedRange,
    BandConflictIu,
    /// The record log could not be written.
    StoreUnavailable,
}

impl Denied {
    pub fn as_str(&self) -> &'static str {
        match self {
            Denied::NonceUnknown => "nonce-unknown",
            Denied::NonceExpired => "nonce-expired",
            Denied::NonceReused => "nonce-reused",
            Denied::Rejected(r) => r.as_str(),
            Denied::BandOutsideManagedRange => "band-outside-managed-range",
            Denied::BandConflictIu => "band-conflict-IU",
            Denied::StoreUnavailable => "store-unavailable",
        }
    }
}

impl std::fmt::Display for Denied {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<NonceError> for Denied {
    fn from(e: NonceError) -> Self {
        match e {
            NonceError::Unknown => Denied::NonceUnknown,
            NonceError::Expired => Denied::NonceExpired,
            NonceError::Reused => Denied::NonceReused,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grant {
    pub id: GrantId,
    pub band: Band,
    pub location: Location,
    pub time_window: TimeWindow,
    pub expiry: u64,
    pub granted_at: u64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("rate limited")]
pub struct RateLimited;

#[derive(Debug)]
struct State {
    db: SpectrumDatabase,
    grants: BTreeMap<GrantId, Grant>,
    log: RecordLog,
}

pub struct Coordinator {
    config: CoordinatorConfig,
    issuers: Vec<PublicKey>,
    nonces: NonceStore,
    limiter: RateLimiter,
    state: Mutex<State>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Coordinator {
    pub fn new(config: CoordinatorConfig, issuers: Vec<PublicKey>, log: RecordLog) -> Result<Self> {
        let db = SpectrumDatabase::new(config.managed, config.channel_width_khz)?;
        Ok(Self {
            nonces: NonceStore::new(config.nonce_ttl),
            limiter: RateLimiter::new(config.rate_limit),
            issuers,
            config,
            state: Mutex::new(State {
                db,
                grants: BTreeMap::new(),
                log,
            }),
        })
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.config
    }

    pub fn issuers(&self) -> &[PublicKey] {
        &self.issuers
    }

    /// A fresh single-use nonce, subject to the per-source rate limit.
    pub fn issue_challenge(
        &self,
        source: &str,
    ) -> std::result::Result<(Nonce, Instant), RateLimited> {
        self.issue_challenge_at(source, Instant::now())
    }

    pub fn issue_challenge_at(
        &self,
        source: &str,
        now: Instant,
    ) -> std::result::Result<(Nonce, Instant), RateLimited> {
        if !self.limiter.allow_at(source, now) {
            return Err(RateLimited);
        }
        Ok(self.nonces.issue_at(&mut rand::rng(), now))
    }

    /// Consumes a nonce without authorizing anything, for requests that are
    /// rejected before they reach `authorize`.
    pub fn burn_nonce(&self, nonce: &Nonce) {
        let _ = self.nonces.consume(nonce);
    }

    pub fn nonce_ttl(&self) -> Duration {
        self.nonces.ttl()
    }

    pub fn authorize(
        &self,
        pres: &Presentation,
        req: &AccessRequest,
        nonce: &Nonce,
    ) -> std::result::Result<(Grant, PreemptionReport), Denied> {
        self.authorize_at(pres, req, nonce, Instant::now(), unix_now())
    }

    /// The nonce is burned before verification, so a failed attempt cannot
    /// be retried with the same challenge.
    pub fn authorize_at(
        &self,
        pres: &Presentation,
        req: &AccessRequest,
        nonce: &Nonce,
        now: Instant,
        now_unix: u64,
    ) -> std::result::Result<(Grant, PreemptionReport), Denied> {
        self.nonces.consume_at(nonce, now)?;
        if !self.config.managed.contains(&req.band()) {
            return Err(Denied::BandOutsideManagedRange);
        }
        let fp = pres.issuer_fingerprint();
        let pk = self
            .issuers
            .iter()
            .find(|pk| pk.fingerprint() == fp)
            .ok_or(Denied::Rejected(RejectReason::SignatureProofInvalid))?;
        if let Verdict::Rejected(r) = verify_presentation(pk, pres, req, nonce) {
            return Err(Denied::Rejected(r));
        }
        self.allocate(req, now_unix)
    }

    /// Allocation without any credential check; the baseline path behind the
    /// IIC, which authenticates users itself.
    pub fn authorize_plain(
        &self,
        req: &AccessRequest,
    ) -> std::result::Result<(Grant, PreemptionReport), Denied> {
        self.authorize_plain_at(req, unix_now())
    }

    pub fn authorize_plain_at(
        &self,
        req: &AccessRequest,
        now_unix: u64,
    ) -> std::result::Result<(Grant, PreemptionReport), Denied> {
        if !self.config.managed.contains(&req.band()) {
            return Err(Denied::BandOutsideManagedRange);
        }
        self.allocate(req, now_unix)
    }

    fn allocate(
        &self,
        req: &AccessRequest,
        now: u64,
    ) -> std::result::Result<(Grant, PreemptionReport), Denied> {
        let band = req.band();
        let mut st = self.state.lock().unwrap();
        let channels = st.db.overlapping(&band);
        let mut stale = Vec::new();
        for &c in &channels {
            if let Some(Occupant::Incumbent(g)) = &st.db.channels()[c].occupant {
                match st.grants.get(g) {
                    Some(grant) if grant.expiry > now => return Err(Denied::BandConflictIu),
                    _ => stale.push(*g),
                }
            }
        }
        // Persist first: a record that cannot be written leaves no trace.
        let record = MinimalRecord {
            band,
            location: req.location,
            time_window: req.time_window,
            granted_at: now,
        };
        st.log
            .append(record)
            .map_err(|_| Denied::StoreUnavailable)?;
        for g in stale {
            st.grants.remove(&g);
            st.db.release_incumbent(&g);
        }
        let report = preempt_overlapping(&band, &mut st.db, now);
        let mut id = [0u8; 16];
        rand::rng().fill_bytes(&mut id);
        let id = GrantId(id);
        st.db.set_incumbent(&channels, id, now);
        let cap = req.time_window.duration_s.min(self.config.grant_cap_s) as u64;
        let grant = Grant {
            id,
            band,
            location: req.location,
            time_window: req.time_window,
            expiry: req.time_window.start_unix_s.max(now) + cap,
            granted_at: now,
        };
        st.grants.insert(id, grant);
        Ok((grant, report))
    }

    /// Removes grants with `expiry ≤ now` from occupancy. Records stay.
    pub fn expire_grants(&self, now: u64) -> usize {
        let mut st = self.state.lock().unwrap();
        let expired: Vec<GrantId> = st
            .grants
            .values()
            .filter(|g| g.expiry <= now)
            .map(|g| g.id)
            .collect();
        for id in &expired {
            st.grants.remove(id);
            st.db.release_incumbent(id);
        }
        expired.len()
    }

    /// Ends a grant early. Returns whether it existed.
    pub fn release(&self, id: &GrantId) -> bool {
        let mut st = self.state.lock().unwrap();
        let existed = st.grants.remove(id).is_some();
        if existed {
            st.db.release_incumbent(id);
        }
        existed
    }

    pub fn grant(&self, id: &GrantId) -> Option<Grant> {
        self.state.lock().unwrap().grants.get(id).copied()
    }

    pub fn active_grants(&self) -> Vec<Grant> {
        self.state
            .lock()
            .unwrap()
            .grants
            .values()
            .copied()
            .collect()
    }

    pub fn export_records(&self) -> Vec<MinimalRecord> {
        self.state.lock().unwrap().log.records().to_vec()
    }

    /// Everything the coordinator would write to disk.
    pub fn persistent_state(&self) -> String {
        self.state.lock().unwrap().log.to_file_string()
    }

    /// Runs `f` on the channel map, e.g. to seed commercial occupants.
    pub fn with_database<T>(&self, f: impl FnOnce(&mut SpectrumDatabase) -> T) -> T {
        f(&mut self.state.lock().unwrap().db)
    }

    pub fn database(&self) -> SpectrumDatabase {
        self.state.lock().unwrap().db.clone()
    }

    /// Deterministic rendering of all mutable coordinator state.
    pub fn snapshot(&self) -> String {
        let st = self.state.lock().unwrap();
        let mut s = String::new();
        for c in st.db.channels() {
            let _ = writeln!(s, "{} {} {:?} {}", c.id, c.band, c.occupant, c.since);
        }
        for g in st.grants.values() {
            let _ = writeln!(s, "{g:?}");
        }
        s.push_str(&st.log.to_file_string());
        s
    }

    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let st = self.state.lock().unwrap();
        let bands: Vec<Band> = st.grants.values().map(|g| g.band).collect();
        st.db.check_invariants(&bands)?;
        for g in st.grants.values() {
            for c in st.db.overlapping(&g.band) {
                if st.db.channels()[c].occupant != Some(Occupant::Incumbent(g.id)) {
                    return Err(format!("grant {} does not hold channel {c}", g.id));
                }
            }
        }
        Ok(())
    }
}
