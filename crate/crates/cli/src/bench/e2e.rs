//! End-to-end comparison against the plaintext baseline over loopback TLS.
//!
//! Rows, each timed on the client with a monotonic clock:
//! - credential issuance: baseline is nonce + enrollment returning the
//!   plaintext profile; IU-GUARD is nonce + blind request + finalize.
//! - identity verification: baseline is the password login; IU-GUARD is
//!   presentation derivation plus the server-reported verification time.
//! - authorization: baseline is login + report; IU-GUARD is
//!   challenge + derive + access.
//!
//! Every grant is released right after it is timed.

use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use iuguard_core::band::Band;
use iuguard_core::coordinator::CBRS_BAND;
use iuguard_core::presentation::{derive_presentation, serialize_presentation};
use iuguard_wire::iic::BaselineAccount;
use iuguard_wire::local::{LocalDeployment, LocalOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{iu_name, request, synthetic_registry};
use crate::stats::BenchResult;

pub const BASELINE_PASSWORD: &str = "bench-baseline-password";

#[derive(Clone, Debug, Serialize)]
pub struct E2eOptions {
    pub trials: usize,
    pub pbkdf2_iterations: u32,
}

impl Default for E2eOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            pbkdf2_iterations: iuguard_wire::iic::DEFAULT_ITERATIONS,
        }
    }
}

pub const ROWS: [&str; 6] = [
    "credential-issuance/baseline",
    "credential-issuance/iu-guard",
    "identity-verification/baseline",
    "identity-verification/iu-guard",
    "authorization/baseline",
    "authorization/iu-guard",
];

pub async fn run(opts: &E2eOptions) -> anyhow::Result<Vec<BenchResult>> {
    if opts.trials == 0 {
        bail!("trials must be at least 1");
    }
    let mut rng = ChaCha20Rng::from_rng(&mut rand::rng());
    let registry = synthetic_registry(1, |_| CBRS_BAND, &mut rng);
    let secret = registry.records()[0].enrollment_secret;
    let iu = iu_name(0);
    let mut o = LocalOptions::new(registry);
    o.accounts = vec![BaselineAccount::new(
        &iu,
        BASELINE_PASSWORD,
        &iu,
        CBRS_BAND,
        opts.pbkdf2_iterations,
    )];
    o.coordinator.rate_limit.burst = u32::MAX;
    o.coordinator.rate_limit.per_second = 1e9;
    let d = LocalDeployment::start(o).await?;
    let c = d.clients();
    let pk = d.issuer_pk.clone();
    let band = Band::new(3_600_000, 3_610_000).unwrap();

    let mut t: [Vec<Duration>; 6] = Default::default();
    let mut cred_bytes = 0;
    let mut pres_bytes = 0;
    let result: anyhow::Result<()> = async {
        for _ in 0..opts.trials {
            let s = Instant::now();
            c.ca.issue_baseline(&iu, &secret).await?;
            t[0].push(s.elapsed());

            let s = Instant::now();
            let cred = c.ca.issue(&pk, &iu, &secret).await?;
            t[1].push(s.elapsed());
            cred_bytes = cred.to_bytes().len();

            let s = Instant::now();
            let session = c.iic.login(&iu, BASELINE_PASSWORD).await?;
            t[2].push(s.elapsed());
            let g = c.iic.report(&session.session_token, &request(band)).await?;
            t[4].push(s.elapsed());
            c.scs.release(&g.grant.grant_id).await?;

            let req = request(band);
            let s = Instant::now();
            let nonce = c.scs.challenge().await?;
            let (pk2, cred2) = (pk.clone(), cred.clone());
            let (pres, derive) = tokio::task::spawn_blocking(move || {
                let s = Instant::now();
                let p = derive_presentation(&pk2, &cred2, &req, &nonce, &mut rand::rng());
                (p, s.elapsed())
            })
            .await?;
            let pres = pres?;
            let g = c.scs.access(&pres, &req, &nonce).await?;
            t[5].push(s.elapsed());
            t[3].push(derive + Duration::from_micros(g.verify_us));
            pres_bytes = serialize_presentation(&pres).len();
            c.scs.release(&g.grant.grant_id).await?;
        }
        Ok(())
    }
    .await;
    let leftover = d.coordinator().active_grants().len();
    d.shutdown().await;
    result?;
    if leftover != 0 {
        bail!("{leftover} grants left behind");
    }
    let payload = [
        None,
        Some(cred_bytes),
        None,
        Some(pres_bytes),
        None,
        Some(pres_bytes),
    ];
    ROWS.iter()
        .zip(&t)
        .zip(payload)
        .map(|((name, s), p)| BenchResult::from_samples(name, s, p).context("no samples"))
        .collect()
}
