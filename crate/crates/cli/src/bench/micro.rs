//! Issue, Present and Verify timed in process, with no network.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use iuguard_core::credential::{
    create_credential_request, finalize_credential, issue_credential, Issuer, MESSAGE_COUNT,
};
use iuguard_core::crypto::bbs::keygen;
use iuguard_core::nonce::NonceStore;
use iuguard_core::presentation::{derive_presentation, serialize_presentation, verify_presentation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{random_pair, request, synthetic_registry};
use crate::stats::BenchResult;

#[derive(Clone, Debug, Serialize)]
pub struct MicroOptions {
    pub trials: usize,
    /// Fixes every random choice, so proof sizes repeat exactly.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct MicroReport {
    /// Issue, Present, Verify, in that order.
    pub rows: Vec<BenchResult>,
    /// Per-trial Present + Verify.
    pub present_verify: BenchResult,
    pub credential_bytes: usize,
    pub presentation_bytes: Vec<usize>,
}

pub fn run(opts: &MicroOptions) -> anyhow::Result<MicroReport> {
    if opts.trials == 0 {
        bail!("trials must be at least 1");
    }
    let mut rng = match opts.seed {
        Some(s) => ChaCha20Rng::seed_from_u64(s),
        None => ChaCha20Rng::from_rng(&mut rand::rng()),
    };
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    let kp = keygen(&seed, MESSAGE_COUNT)?;
    let pk = kp.public_key().clone();
    let bands: Vec<_> = (0..opts.trials).map(|_| random_pair(&mut rng)).collect();
    let registry = Arc::new(synthetic_registry(opts.trials, |i| bands[i].0, &mut rng));
    let issuer = Issuer::new(registry.clone(), kp, NonceStore::default())?;

    let (mut issue, mut present, mut verify, mut both) = (vec![], vec![], vec![], vec![]);
    let mut sizes = Vec::with_capacity(opts.trials);
    let mut credential_bytes = 0;
    for (i, (_, req_band)) in bands.iter().enumerate() {
        let rec = &registry.records()[i];
        let t = Instant::now();
        let nonce = issuer.issue_nonce(&mut rng);
        let (creq, state) =
            create_credential_request(&pk, &rec.iu_id, &rec.enrollment_secret, &nonce, &mut rng);
        let resp = issue_credential(&issuer, &creq, &mut rng)?;
        let cred = finalize_credential(&pk, &resp, &state)?;
        issue.push(t.elapsed());
        credential_bytes = cred.to_bytes().len();

        let req = request(*req_band);
        let challenge = iuguard_core::nonce::Nonce::random(&mut rng);
        let t = Instant::now();
        let pres = derive_presentation(&pk, &cred, &req, &challenge, &mut rng)?;
        let dp = t.elapsed();
        let t = Instant::now();
        let verdict = verify_presentation(&pk, &pres, &req, &challenge);
        let dv = t.elapsed();
        if !verdict.is_accepted() {
            bail!("honest presentation rejected in trial {i}: {verdict:?}");
        }
        present.push(dp);
        verify.push(dv);
        both.push(dp + dv);
        sizes.push(serialize_presentation(&pres).len());
    }
    let row = |name: &str, s: &[Duration], bytes| {
        BenchResult::from_samples(name, s, bytes).context("no samples")
    };
    let avg = sizes.iter().sum::<usize>() / sizes.len();
    Ok(MicroReport {
        rows: vec![
            row("issue", &issue, Some(credential_bytes))?,
            row("present", &present, Some(avg))?,
            row("verify", &verify, Some(avg))?,
        ],
        present_verify: row("present+verify", &both, Some(avg))?,
        credential_bytes,
        presentation_bytes: sizes,
    })
}
