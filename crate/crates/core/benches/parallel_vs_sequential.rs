use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ff::Field;
use group::Group;
use iuguard_core::crypto::msm::{fixed_bases, msm_with};
use iuguard_core::crypto::Scalar;
use iuguard_core::fixtures::{issue_credential_for, issuer_keypair};
use iuguard_core::nonce::Nonce;
use iuguard_core::par::Execution;
use iuguard_core::presentation::{derive_presentation, verify_batch, AccessRequest, Location, TimeWindow};
use iuguard_core::Band;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn batch_verify(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let kp = issuer_keypair(1);
    let cbrs = Band::new(3_550_000, 3_700_000).unwrap();
    let cred = issue_credential_for(&kp, "radar-01", cbrs, &mut rng);
    let req = AccessRequest::new(
        Band::new(3_560_000, 3_580_000).unwrap(),
        Location {
            lat_microdeg: 36_850_000,
            lon_microdeg: -76_290_000,
        },
        TimeWindow {
            start_unix_s: 1_760_000_000,
            duration_s: 600,
        },
    );
    let items: Vec<_> = (0..32)
        .map(|_| {
            let n = Nonce::random(&mut rng);
            (derive_presentation(kp.public_key(), &cred, &req, &n, &mut rng).unwrap(), req, n)
        })
        .collect();
    let mut g = c.benchmark_group("verify_batch_32");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| verify_batch(exec, kp.public_key(), &items)));
    }
    g.finish();
}

fn msm(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut g = c.benchmark_group("msm");
    for n in [64usize, 256, 1024] {
        let points: Vec<_> = (0..n).map(|_| bls12_381::G1Projective::random(&mut rng)).collect();
        let scalars: Vec<_> = (0..n).map(|_| Scalar::random(&mut rng)).collect();
        for (name, exec) in MODES {
            g.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| b.iter(|| msm_with(exec, &points, &scalars)));
        }
    }
    g.finish();
}

fn tables(c: &mut Criterion) {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let bases: Vec<_> = (0..16).map(|_| bls12_381::G1Projective::random(&mut rng)).collect();
    let mut g = c.benchmark_group("fixed_base_tables_16");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(name, |b| b.iter(|| fixed_bases(exec, &bases)));
    }
    g.finish();
}

criterion_group!(benches, batch_verify, msm, tables);
criterion_main!(benches);
