//! Closed-loop concurrency sweep.
//!
//! Each simulated user owns a credential, a baseline account, a 10 kHz
//! channel nobody else requests, and its own keep-alive connections. It
//! runs loops back to back with no think time until the window closes,
//! always finishing at least one. IU loops are challenge, derive, access;
//! baseline loops are login, report. Both release their grant afterwards,
//! outside the timed span.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use iuguard_core::band::Band;
use iuguard_core::coordinator::CBRS_BAND;
use iuguard_core::credential::{create_credential_request, finalize_credential, issue_credential, Credential};
use iuguard_core::presentation::derive_presentation;
use iuguard_wire::config::Clients;
use iuguard_wire::iic::BaselineAccount;
use iuguard_wire::local::{LocalDeployment, LocalOptions};
use iuguard_wire::ClientError;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use tokio::sync::Semaphore;

use super::{iu_name, request, synthetic_registry};
use crate::stats::{ms, percentile, SweepPoint};

pub const USER_COUNTS: [usize; 7] = [10, 50, 100, 500, 1000, 2000, 5000];
pub const LOAD_MODEL: &str =
    "closed-loop; zero think time; connections reused per user; one channel per user";
const CHANNEL_KHZ: u32 = 10;
const PASSWORD: &str = "bench-load-password";

#[derive(Clone, Debug, Serialize)]
pub struct LoadOptions {
    pub user_counts: Vec<usize>,
    /// Points above this are skipped.
    pub max_users: usize,
    pub window: Duration,
    pub iu_guard: bool,
    pub baseline: bool,
    pub pbkdf2_iterations: u32,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            user_counts: USER_COUNTS.to_vec(),
            max_users: 5000,
            window: Duration::from_secs(10),
            iu_guard: true,
            baseline: true,
            pbkdf2_iterations: iuguard_wire::iic::DEFAULT_ITERATIONS,
        }
    }
}

fn channel(i: usize) -> Band {
    let lo = CBRS_BAND.f_low_khz + i as u32 * CHANNEL_KHZ;
    Band::new(lo, lo + CHANNEL_KHZ).unwrap()
}

struct User {
    name: String,
    cred: Arc<Credential>,
    band: Band,
}

#[derive(Default)]
struct Tally {
    latencies: Vec<Duration>,
    errors: Vec<String>,
}

pub struct Sweep {
    d: LocalDeployment,
    users: Vec<User>,
    /// Simulated devices share the generator's cores. Unbounded blocking
    /// derivations would starve the async workers that run TLS handshakes.
    derive_slots: Arc<Semaphore>,
}

impl Sweep {
    /// Starts the services and provisions `users` credentials and accounts.
    pub async fn prepare(users: usize, pbkdf2_iterations: u32) -> anyhow::Result<Self> {
        let max_users = (CBRS_BAND.width_khz() / CHANNEL_KHZ) as usize;
        if users == 0 || users > max_users {
            bail!("user count must be within 1..={max_users}");
        }
        let mut rng = ChaCha20Rng::from_rng(&mut rand::rng());
        let registry = synthetic_registry(users, |_| CBRS_BAND, &mut rng);
        let records = registry.records().to_vec();
        let mut o = LocalOptions::new(registry);
        o.accounts = tokio::task::spawn_blocking(move || {
            (0..users)
                .map(|i| {
                    let n = iu_name(i);
                    BaselineAccount::new(&n, PASSWORD, &n, CBRS_BAND, pbkdf2_iterations)
                })
                .collect()
        })
        .await?;
        o.coordinator.channel_width_khz = CHANNEL_KHZ;
        // A challenge may wait behind thousands of verifications.
        o.coordinator.nonce_ttl = Duration::from_secs(3600);
        o.coordinator.rate_limit.burst = u32::MAX;
        o.coordinator.rate_limit.per_second = 1e9;
        o.ca_nonce_ttl = Duration::from_secs(3600);
        o.client_timeout = Duration::from_secs(1800);
        let d = LocalDeployment::start(o).await?;

        // Credentials come from the CA's own issuer through the blind flow,
        // without the network round trips.
        let ca = d.ca.clone();
        let pk = d.issuer_pk.clone();
        let creds = tokio::task::spawn_blocking(move || {
            let mut rng = rand::rng();
            records
                .iter()
                .map(|r| {
                    let n = ca.issuer().issue_nonce(&mut rng);
                    let (req, st) =
                        create_credential_request(&pk, &r.iu_id, &r.enrollment_secret, &n, &mut rng);
                    let resp = issue_credential(ca.issuer(), &req, &mut rng)?;
                    finalize_credential(&pk, &resp, &st)
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .await??;
        let users = creds
            .into_iter()
            .enumerate()
            .map(|(i, c)| User {
                name: iu_name(i),
                cred: Arc::new(c),
                band: channel(i),
            })
            .collect();
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        Ok(Self {
            d,
            users,
            derive_slots: Arc::new(Semaphore::new(cores)),
        })
    }

    pub fn capacity(&self) -> usize {
        self.users.len()
    }

    /// One sweep point with the first `n` users.
    pub async fn point(&self, n: usize, window: Duration, baseline: bool) -> anyhow::Result<SweepPoint> {
        if n == 0 || n > self.users.len() {
            bail!("point needs 1..={} users", self.users.len());
        }
        let start = Instant::now();
        let deadline = start + window;
        let mut tasks = Vec::with_capacity(n);
        for u in &self.users[..n] {
            let clients = self.d.clients();
            let pk = self.d.issuer_pk.clone();
            let slots = self.derive_slots.clone();
            let (name, cred, band) = (u.name.clone(), u.cred.clone(), u.band);
            tasks.push(tokio::spawn(async move {
                let mut tally = Tally::default();
                while Instant::now() < deadline || (tally.latencies.is_empty() && tally.errors.is_empty()) {
                    let r = if baseline {
                        baseline_loop(&clients, &name, band).await.map_err(Into::into)
                    } else {
                        iu_loop(&clients, &pk, &cred, band, &slots).await
                    };
                    match r {
                        Ok(d) => tally.latencies.push(d),
                        Err(e) => tally.errors.push(e.to_string()),
                    }
                }
                tally
            }));
        }
        let mut all = Tally::default();
        for t in tasks {
            let t = t.await.context("load task panicked")?;
            all.latencies.extend(t.latencies);
            all.errors.extend(t.errors);
        }
        let elapsed = start.elapsed();
        if let Some(e) = all.errors.first() {
            eprintln!("{} errors at {n} users, first: {e}", all.errors.len());
        }
        let leftover = self.d.coordinator().active_grants().len();
        if leftover != 0 {
            bail!("{leftover} grants left behind at {n} users");
        }
        let mut v: Vec<f64> = all.latencies.iter().copied().map(ms).collect();
        v.sort_by(f64::total_cmp);
        Ok(SweepPoint {
            path: if baseline { "baseline" } else { "iu-guard" }.into(),
            concurrent_users: n,
            completed: v.len(),
            p95_latency_ms: if v.is_empty() { f64::NAN } else { percentile(&v, 95.0) },
            throughput_rps: v.len() as f64 / elapsed.as_secs_f64(),
            error_count: all.errors.len(),
            elapsed_s: elapsed.as_secs_f64(),
        })
    }

    pub async fn shutdown(self) {
        self.d.shutdown().await;
    }
}

async fn iu_loop(
    c: &Clients,
    pk: &iuguard_core::crypto::bbs::PublicKey,
    cred: &Arc<Credential>,
    band: Band,
    slots: &Semaphore,
) -> anyhow::Result<Duration> {
    let req = request(band);
    let s = Instant::now();
    let nonce = c.scs.challenge().await?;
    let (pk, cred) = (pk.clone(), cred.clone());
    let slot = slots.acquire().await?;
    let pres = tokio::task::spawn_blocking(move || {
        derive_presentation(&pk, &cred, &req, &nonce, &mut rand::rng())
    })
    .await??;
    drop(slot);
    let g = c.scs.access(&pres, &req, &nonce).await?;
    let took = s.elapsed();
    c.scs.release(&g.grant.grant_id).await?;
    Ok(took)
}

async fn baseline_loop(c: &Clients, name: &str, band: Band) -> Result<Duration, ClientError> {
    let s = Instant::now();
    let session = c.iic.login(name, PASSWORD).await?;
    let g = c.iic.report(&session.session_token, &request(band)).await?;
    let took = s.elapsed();
    c.scs.release(&g.grant.grant_id).await?;
    Ok(took)
}

/// The whole sweep. Points run largest-last; for each user count the
/// baseline point (if requested) runs before the IU-GUARD one.
pub async fn run(opts: &LoadOptions) -> anyhow::Result<Vec<SweepPoint>> {
    let mut counts: Vec<usize> = opts
        .user_counts
        .iter()
        .copied()
        .filter(|&n| n <= opts.max_users)
        .collect();
    counts.sort_unstable();
    counts.dedup();
    let Some(&top) = counts.last() else {
        bail!("no user counts at or below --max-users {}", opts.max_users);
    };
    let sweep = Sweep::prepare(top, opts.pbkdf2_iterations).await?;
    let mut out = Vec::new();
    let result: anyhow::Result<()> = async {
        for &n in &counts {
            if opts.baseline {
                out.push(sweep.point(n, opts.window, true).await?);
            }
            if opts.iu_guard {
                out.push(sweep.point(n, opts.window, false).await?);
            }
        }
        Ok(())
    }
    .await;
    sweep.shutdown().await;
    result?;
    Ok(out)
}

/// Baseline minus IU-GUARD throughput at each user count both paths ran.
pub fn throughput_gaps(points: &[SweepPoint]) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for b in points.iter().filter(|p| p.path == "baseline") {
        if let Some(i) = points
            .iter()
            .find(|p| p.path == "iu-guard" && p.concurrent_users == b.concurrent_users)
        {
            out.push((b.concurrent_users, b.throughput_rps - i.throughput_rps));
        }
    }
    out
}
