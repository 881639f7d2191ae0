//! Result rows and their summary statistics.

use std::time::Duration;

use serde::Serialize;

/// One benchmark row. Timings come from `Instant` only.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub scenario: String,
    pub trials: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub payload_bytes: Option<usize>,
}

/// Nearest-rank percentile of an ascending slice.
pub fn percentile(sorted_ms: &[f64], p: f64) -> f64 {
    assert!(!sorted_ms.is_empty());
    let rank = ((p / 100.0) * sorted_ms.len() as f64).ceil() as usize;
    sorted_ms[rank.clamp(1, sorted_ms.len()) - 1]
}

pub fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl BenchResult {
    /// `None` when there are no samples.
    pub fn from_samples(
        scenario: &str,
        samples: &[Duration],
        payload_bytes: Option<usize>,
    ) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut v: Vec<f64> = samples.iter().copied().map(ms).collect();
        v.sort_by(f64::total_cmp);
        Some(Self {
            scenario: scenario.to_string(),
            trials: v.len(),
            mean_ms: v.iter().sum::<f64>() / v.len() as f64,
            p50_ms: percentile(&v, 50.0),
            p95_ms: percentile(&v, 95.0),
            payload_bytes,
        })
    }
}

/// One point of a concurrency sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    /// `iu-guard` or `baseline`.
    pub path: String,
    pub concurrent_users: usize,
    pub completed: usize,
    pub p95_latency_ms: f64,
    pub throughput_rps: f64,
    pub error_count: usize,
    pub elapsed_s: f64,
}

impl SweepPoint {
    pub fn is_valid(&self) -> bool {
        self.error_count == 0 && self.completed > 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_matches_hand_computed_values() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&[7.0], 95.0), 7.0);
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 50.0), 2.0);
        assert_eq!(percentile(&v, 95.0), 4.0);
    }

    #[test]
    fn rows_respect_ordering_and_reject_empty_input() {
        assert!(BenchResult::from_samples("x", &[], None).is_none());
        let s: Vec<Duration> = [5, 1, 9, 3].map(Duration::from_millis).to_vec();
        let r = BenchResult::from_samples("x", &s, Some(10)).unwrap();
        assert_eq!(r.trials, 4);
        assert!(r.p50_ms <= r.p95_ms);
        assert!((r.mean_ms - 4.5).abs() < 1e-9);
        assert_eq!(r.p95_ms, 9.0);
    }
}
