//! Single-use, time-limited nonces shared by the issuer and the coordinator.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand_core::CryptoRng;

pub const NONCE_LEN: usize = 32;
pub const DEFAULT_TTL: Duration = Duration::from_secs(60);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl Nonce {
    pub fn random<R: CryptoRng + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut b);
        Self(b)
    }

    pub fn from_bytes(b: [u8; NONCE_LEN]) -> Self {
        Self(b)
    }

    pub fn as_bytes(&self) -> &[u8; NONCE_LEN] {
        &self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum NonceError {
    #[error("nonce unknown")]
    Unknown,
    #[error("nonce expired")]
    Expired,
    #[error("nonce already used")]
    Reused,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    expires: Instant,
    used: bool,
}

/// Consumed nonces are kept as tombstones until they expire so that a replay
/// is reported as reuse rather than as an unknown nonce.
#[derive(Debug)]
pub struct NonceStore {
    ttl: Duration,
    entries: Mutex<HashMap<Nonce, Entry>>,
}

impl Default for NonceStore {
    fn default() -> Self {
        Self::new(DEFAULT_TTL)
    }
}

impl NonceStore {
    pub fn new(ttl: Duration) -> Self {
        Self {
            ttl,
            entries: Mutex::new(HashMap::new()),
        }
    }

    pub fn ttl(&self) -> Duration {
        self.ttl
    }

    pub fn issue<R: CryptoRng + ?Sized>(&self, rng: &mut R) -> (Nonce, Instant) {
        self.issue_at(rng, Instant::now())
    }

    pub fn issue_at<R: CryptoRng + ?Sized>(&self, rng: &mut R, now: Instant) -> (Nonce, Instant) {
        let expires = now + self.ttl;
        let mut map = self.entries.lock().unwrap();
        // Amortized sweep: only at power-of-two sizes, so cost stays O(1) per issue.
        if map.len() >= 4096 && map.len().is_power_of_two() {
            map.retain(|_, e| e.expires > now);
        }
        loop {
            let n = Nonce::random(rng);
            if let std::collections::hash_map::Entry::Vacant(v) = map.entry(n) {
                v.insert(Entry {
                    expires,
                    used: false,
                });
                return (n, expires);
            }
        }
    }

    /// Atomically checks and marks `nonce` as used.
    pub fn consume(&self, nonce: &Nonce) -> Result<(), NonceError> {
        self.consume_at(nonce, Instant::now())
    }

    pub fn consume_at(&self, nonce: &Nonce, now: Instant) -> Result<(), NonceError> {
        let mut map = self.entries.lock().unwrap();
        let e = map.get_mut(nonce).ok_or(NonceError::Unknown)?;
        if e.used {
            return Err(NonceError::Reused);
        }
        if now >= e.expires {
            map.remove(nonce);
            return Err(NonceError::Expired);
        }
        e.used = true;
        Ok(())
    }

    /// Read-only status check, used to refuse work before the expensive
    /// verification step.
    pub fn check_at(&self, nonce: &Nonce, now: Instant) -> Result<(), NonceError> {
        let map = self.entries.lock().unwrap();
        match map.get(nonce) {
            None => Err(NonceError::Unknown),
            Some(e) if e.used => Err(NonceError::Reused),
            Some(e) if now >= e.expires => Err(NonceError::Expired),
            Some(_) => Ok(()),
        }
    }

    /// Drops expired entries, returning how many were removed.
    pub fn purge(&self, now: Instant) -> usize {
        let mut map = self.entries.lock().unwrap();
        let before = map.len();
        map.retain(|_, e| e.expires > now);
        before - map.len()
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
