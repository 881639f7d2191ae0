//! Per-source token bucket for challenge issuance.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateLimit {
    /// Bucket size; also the number of requests a new source may burst.
    pub burst: u32,
    pub per_second: f64,
}

impl Default for RateLimit {
    fn default() -> Self {
        Self {
            burst: 20,
            per_second: 10.0,
        }
    }
}

#[derive(Debug)]
pub struct RateLimiter {
    limit: RateLimit,
    buckets: Mutex<HashMap<String, (f64, Instant)>>,
}

impl RateLimiter {
    pub fn new(limit: RateLimit) -> Self {
        Self {
            limit,
            buckets: Mutex::new(HashMap::new()),
        }
    }

    pub fn allow(&self, source: &str) -> bool {
        self.allow_at(source, Instant::now())
    }

    pub fn allow_at(&self, source: &str, now: Instant) -> bool {
        let cap = self.limit.burst as f64;
        let mut map = self.buckets.lock().unwrap();
        if map.len() > 65_536 {
            // Buckets idle long enough to be full again carry no state.
            let refill = self.limit.per_second.max(f64::MIN_POSITIVE);
            map.retain(|_, (tokens, at)| {
                *tokens + now.saturating_duration_since(*at).as_secs_f64() * refill < cap
            });
        }
        let (tokens, at) = map.entry(source.to_string()).or_insert((cap, now));
        let elapsed = now.saturating_duration_since(*at).as_secs_f64();
        *tokens = (*tokens + elapsed * self.limit.per_second).min(cap);
        *at = now;
        if *tokens >= 1.0 {
            *tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    #[test]
    fn burst_then_refill() {
        let rl = RateLimiter::new(RateLimit {
            burst: 3,
            per_second: 2.0,
        });
        let t = Instant::now();
        assert!((0..3).all(|_| rl.allow_at("a", t)));
        assert!(!rl.allow_at("a", t));
        assert!(rl.allow_at("b", t), "sources are independent");
        assert!(rl.allow_at("a", t + Duration::from_millis(500)));
        assert!(!rl.allow_at("a", t + Duration::from_millis(500)));
    }
}
