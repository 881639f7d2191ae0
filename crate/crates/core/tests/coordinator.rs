use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use iuguard_core::coordinator::{
    parse_records, preempt_overlapping, Coordinator, CoordinatorConfig, Denied, GrantId, Occupant,
    Preemption, RateLimit, RecordLog, SpectrumDatabase, Tier,
};
use iuguard_core::credential::{encode_iu_id, Credential};
use iuguard_core::crypto::bbs::SignerKeyPair;
use iuguard_core::crypto::codec::scalar_to_bytes;
use iuguard_core::fixtures::{issue_credential_for, issuer_keypair};
use iuguard_core::nonce::Nonce;
use iuguard_core::presentation::{
    derive_presentation, serialize_presentation, AccessRequest, Location, RejectReason, TimeWindow,
};
use iuguard_core::Band;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha20Rng;

const CBRS: Band = Band {
    f_low_khz: 3_550_000,
    f_high_khz: 3_700_000,
};
const TOY: Band = Band {
    f_low_khz: 3_550_000,
    f_high_khz: 3_650_000,
};
const W: u32 = 10_000;
const NOW: u64 = 1_760_000_000;

fn req(band: Band, lat: i64, start: u64, dur: u32) -> AccessRequest {
    AccessRequest::new(
        band,
        Location {
            lat_microdeg: lat,
            lon_microdeg: -76_290_000,
        },
        TimeWindow {
            start_unix_s: start,
            duration_s: dur,
        },
    )
}

fn coordinator(managed: Band, kp: &SignerKeyPair) -> Coordinator {
    let cfg = CoordinatorConfig {
        managed,
        grant_cap_s: 60,
        ..Default::default()
    };
    Coordinator::new(cfg, vec![kp.public_key().clone()], RecordLog::in_memory()).unwrap()
}

struct Iu {
    kp: SignerKeyPair,
    cred: Credential,
    rng: ChaCha20Rng,
}

fn iu(seed: u64) -> Iu {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let kp = issuer_keypair(1);
    let cred = issue_credential_for(&kp, "radar-01", CBRS, &mut rng);
    Iu { kp, cred, rng }
}

#[test]
fn gaa_on_overlapped_channel_is_reassigned() {
    let mut u = iu(1);
    let c = coordinator(CBRS, &u.kp);
    c.with_database(|db| db.occupy_commercial(0, Tier::Gaa, "cbsd-7", NOW))
        .unwrap();
    let r = req(Band::new(3_550_000, 3_560_000).unwrap(), 1, NOW, 600);
    let (n, _) = c.issue_challenge("10.0.0.1").unwrap();
    let p = derive_presentation(u.kp.public_key(), &u.cred, &r, &n, &mut u.rng).unwrap();
    let (grant, report) = c.authorize(&p, &r, &n).unwrap();
    assert_eq!(grant.band, r.band());
    assert_eq!(
        report.entries,
        vec![Preemption {
            channel_id: 0,
            displaced: Tier::Gaa,
            reassigned_to: Some(1)
        }]
    );
    let db = c.database();
    assert_eq!(
        db.channel(0).unwrap().occupant,
        Some(Occupant::Incumbent(grant.id))
    );
    assert_eq!(
        db.channel(1).unwrap().occupant.as_ref().unwrap().tier(),
        Tier::Gaa
    );
    assert_eq!(c.authorize(&p, &r, &n).unwrap_err(), Denied::NonceReused);
}

#[test]
fn nonce_lifecycle_and_rate_limit() {
    let mut u = iu(2);
    let cfg = CoordinatorConfig {
        rate_limit: RateLimit {
            burst: 3,
            per_second: 1.0,
        },
        ..Default::default()
    };
    let c = Coordinator::new(cfg, vec![u.kp.public_key().clone()], RecordLog::in_memory()).unwrap();
    let t0 = Instant::now();
    let r = req(Band::new(3_600_000, 3_610_000).unwrap(), 2, NOW, 600);
    let (n, exp) = c.issue_challenge_at("a", t0).unwrap();
    assert_eq!(exp, t0 + Duration::from_secs(60));
    let p = derive_presentation(u.kp.public_key(), &u.cred, &r, &n, &mut u.rng).unwrap();
    assert_eq!(
        c.authorize_at(&p, &r, &n, t0 + Duration::from_secs(61), NOW)
            .unwrap_err(),
        Denied::NonceExpired
    );
    let unknown = Nonce::random(&mut u.rng);
    assert_eq!(
        c.authorize_at(&p, &r, &unknown, t0, NOW).unwrap_err(),
        Denied::NonceUnknown
    );

    assert!(c.issue_challenge_at("a", t0).is_ok());
    assert!(c.issue_challenge_at("a", t0).is_ok());
    assert!(c.issue_challenge_at("a", t0).is_err());
    assert!(c.issue_challenge_at("b", t0).is_ok());
    assert!(c
        .issue_challenge_at("a", t0 + Duration::from_secs(1))
        .is_ok());
}

#[test]
fn denials_leave_state_identical() {
    let mut u = iu(3);
    let c = coordinator(CBRS, &u.kp);
    c.with_database(|db| db.occupy_commercial(5, Tier::Pal, "p", NOW))
        .unwrap();
    let held = req(Band::new(3_600_000, 3_620_000).unwrap(), 3, NOW, 600);
    c.authorize_plain_at(&held, NOW).unwrap();
    let before = c.snapshot();
    let pk = u.kp.public_key().clone();

    let mut attempt = |r: &AccessRequest, sign_as: Option<&AccessRequest>| {
        let (n, _) = c.issue_challenge("x").unwrap();
        let p = derive_presentation(&pk, &u.cred, sign_as.unwrap_or(r), &n, &mut u.rng).unwrap();
        c.authorize_at(&p, r, &n, Instant::now(), NOW).unwrap_err()
    };
    let conflict = req(Band::new(3_615_000, 3_630_000).unwrap(), 3, NOW, 600);
    assert_eq!(attempt(&conflict, None), Denied::BandConflictIu);
    let other = req(Band::new(3_560_000, 3_570_000).unwrap(), 3, NOW, 600);
    let moved = req(Band::new(3_560_000, 3_570_000).unwrap(), 4, NOW, 600);
    assert_eq!(
        attempt(&moved, Some(&other)),
        Denied::Rejected(RejectReason::ContextMismatch)
    );
    let outside = req(Band::new(3_540_000, 3_560_000).unwrap(), 3, NOW, 600);
    let (n, _) = c.issue_challenge("x").unwrap();
    let p = derive_presentation(&pk, &u.cred, &other, &n, &mut u.rng).unwrap();
    assert_eq!(
        c.authorize_at(&p, &outside, &n, Instant::now(), NOW)
            .unwrap_err(),
        Denied::BandOutsideManagedRange
    );
    let foreign = issuer_keypair(9);
    let fcred = issue_credential_for(&foreign, "radar-01", CBRS, &mut u.rng);
    let (n, _) = c.issue_challenge("x").unwrap();
    let p = derive_presentation(foreign.public_key(), &fcred, &other, &n, &mut u.rng).unwrap();
    assert_eq!(
        c.authorize_at(&p, &other, &n, Instant::now(), NOW)
            .unwrap_err(),
        Denied::Rejected(RejectReason::SignatureProofInvalid)
    );
    assert_eq!(c.snapshot(), before);
}

/// Channel indices a band touches, by arithmetic on the channel grid.
fn grid(managed: Band, band: &Band) -> std::ops::Range<usize> {
    let lo = (band.f_low_khz - managed.f_low_khz) / W;
    let hi = (band.f_high_khz - managed.f_low_khz).div_ceil(W);
    lo as usize..hi as usize
}

fn random_band<R: Rng + ?Sized>(rng: &mut R, managed: Band) -> Band {
    if rng.random_bool(0.5) {
        let n = managed.width_khz() / W;
        let a = rng.random_range(0..n);
        let b = rng.random_range(a + 1..=n.min(a + 3));
        Band::new(managed.f_low_khz + a * W, managed.f_low_khz + b * W).unwrap()
    } else {
        let lo = rng.random_range(managed.f_low_khz..managed.f_high_khz);
        let hi = rng.random_range(lo + 1..=managed.f_high_khz.min(lo + 25_000));
        Band::new(lo, hi).unwrap()
    }
}

#[test]
fn iu_conflicts_match_brute_force_overlap_oracle() {
    let kp = issuer_keypair(1);
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    for _ in 0..40 {
        let c = coordinator(TOY, &kp);
        let mut active: Vec<(GrantId, Band)> = Vec::new();
        for _ in 0..30 {
            let band = random_band(&mut rng, TOY);
            // Oracle: a conflict is a shared channel index on the 10 MHz grid.
            let want_conflict = active
                .iter()
                .any(|(_, b)| grid(TOY, b).any(|i| grid(TOY, &band).any(|j| i == j)));
            // Direct frequency overlap always conflicts.
            if active.iter().any(|(_, b)| b.overlaps(&band)) {
                assert!(want_conflict);
            }
            match c.authorize_plain_at(&req(band, 0, NOW, 60), NOW) {
                Ok((g, _)) => {
                    assert!(!want_conflict, "{band} granted over {active:?}");
                    active.push((g.id, band));
                }
                Err(d) => {
                    assert_eq!(d, Denied::BandConflictIu);
                    assert!(want_conflict, "{band} denied, active {active:?}");
                }
            }
            if !active.is_empty() && rng.random_bool(0.3) {
                let (id, _) = active.swap_remove(rng.random_range(0..active.len()));
                assert!(c.release(&id));
            }
            c.check_invariants().unwrap();
        }
    }
}

fn random_commercial_db<R: Rng + ?Sized>(rng: &mut R, n: u32) -> SpectrumDatabase {
    let managed = Band::new(3_000_000, 3_000_000 + n * W).unwrap();
    let mut db = SpectrumDatabase::new(managed, W).unwrap();
    for i in 0..n as usize {
        match rng.random_range(0..3) {
            0 => db
                .occupy_commercial(i, Tier::Pal, &format!("pal-{i}"), 0)
                .unwrap(),
            1 => db
                .occupy_commercial(i, Tier::Gaa, &format!("gaa-{i}"), 0)
                .unwrap(),
            _ => {}
        }
    }
    db
}

#[test]
fn randomized_preemption_matches_exhaustive_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..300 {
        let mut db = random_commercial_db(&mut rng, 50);
        let managed = db.managed();
        let band = {
            let lo = rng.random_range(managed.f_low_khz..managed.f_high_khz);
            let hi = rng.random_range(lo + 1..=managed.f_high_khz.min(lo + 200_000));
            Band::new(lo, hi).unwrap()
        };
        let before = db.clone();
        let report = preempt_overlapping(&band, &mut db, 1);
        assert_eq!(
            preempt_overlapping(&band, &mut before.clone(), 1),
            report,
            "deterministic"
        );

        // Oracle: displaced occupants in channel order, paired with free
        // channels outside the band in index order.
        let inside: Vec<usize> = (0..50)
            .filter(|&i| before.channel(i).unwrap().band.overlaps(&band))
            .collect();
        let displaced: Vec<usize> = inside
            .iter()
            .copied()
            .filter(|&i| before.channel(i).unwrap().occupant.is_some())
            .collect();
        let free: Vec<usize> = (0..50)
            .filter(|&i| {
                let c = before.channel(i).unwrap();
                c.occupant.is_none() && !c.band.overlaps(&band)
            })
            .collect();
        assert_eq!(report.entries.len(), displaced.len());
        for (k, (p, &from)) in report.entries.iter().zip(&displaced).enumerate() {
            assert_eq!(p.channel_id, from);
            assert_eq!(
                p.displaced,
                before
                    .channel(from)
                    .unwrap()
                    .occupant
                    .as_ref()
                    .unwrap()
                    .tier()
            );
            assert_ne!(p.displaced, Tier::Iu);
            assert_eq!(p.reassigned_to, free.get(k).copied());
            if let Some(to) = p.reassigned_to {
                assert_eq!(
                    db.channel(to).unwrap().occupant,
                    before.channel(from).unwrap().occupant
                );
            }
        }
        for c in db.channels() {
            if c.band.overlaps(&band) {
                assert!(c.occupant.is_none(), "commercial left in granted band");
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Slot {
    Free,
    Iu(GrantId),
    Com(Tier, String),
}

/// Reference occupancy map replaying the documented policy.
struct Model {
    slots: Vec<Slot>,
    bands: Vec<Band>,
    grants: BTreeMap<GrantId, (Band, u64)>,
}

impl Model {
    fn new(db: &SpectrumDatabase) -> Self {
        Self {
            slots: vec![Slot::Free; db.channels().len()],
            bands: db.channels().iter().map(|c| c.band).collect(),
            grants: BTreeMap::new(),
        }
    }

    fn drop_grant(&mut self, id: &GrantId) {
        self.grants.remove(id);
        for s in &mut self.slots {
            if *s == Slot::Iu(*id) {
                *s = Slot::Free;
            }
        }
    }

    fn conflicts(&self, band: &Band, now: u64) -> bool {
        (0..self.slots.len()).any(|i| {
            self.bands[i].overlaps(band)
                && matches!(&self.slots[i], Slot::Iu(g) if self.grants[g].1 > now)
        })
    }

    fn grant(&mut self, id: GrantId, band: Band, expiry: u64) {
        let overlap: Vec<usize> = (0..self.slots.len())
            .filter(|&i| self.bands[i].overlaps(&band))
            .collect();
        let stale: Vec<GrantId> = overlap
            .iter()
            .filter_map(|&i| match self.slots[i] {
                Slot::Iu(g) => Some(g),
                _ => None,
            })
            .collect();
        for g in stale {
            self.drop_grant(&g);
        }
        for &i in &overlap {
            if let Slot::Com(..) = self.slots[i] {
                let moved = std::mem::replace(&mut self.slots[i], Slot::Free);
                if let Some(j) = (0..self.slots.len())
                    .find(|&j| self.slots[j] == Slot::Free && !self.bands[j].overlaps(&band))
                {
                    self.slots[j] = moved;
                }
            }
        }
        for &i in &overlap {
            self.slots[i] = Slot::Iu(id);
        }
        self.grants.insert(id, (band, expiry));
    }

    fn matches(&self, db: &SpectrumDatabase) -> bool {
        db.channels().iter().zip(&self.slots).all(|(c, s)| {
            let m = match &c.occupant {
                None => Slot::Free,
                Some(Occupant::Incumbent(g)) => Slot::Iu(*g),
                Some(Occupant::Commercial { tier, reference }) => {
                    Slot::Com(*tier, reference.clone())
                }
            };
            m == *s
        })
    }
}

#[test]
fn thousand_step_fuzz_against_reference_model() {
    let kp = issuer_keypair(1);
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let c = coordinator(TOY, &kp);
    let mut model = Model::new(&c.database());
    let mut now = NOW;
    let mut next_ref = 0;
    for step in 0..1000 {
        let before = c.snapshot();
        match rng.random_range(0..10) {
            0..=2 => {
                let ch = rng.random_range(0..model.slots.len());
                let tier = if rng.random_bool(0.5) {
                    Tier::Pal
                } else {
                    Tier::Gaa
                };
                next_ref += 1;
                let r = format!("c{next_ref}");
                let res = c.with_database(|db| db.occupy_commercial(ch, tier, &r, now));
                assert_eq!(res.is_ok(), model.slots[ch] == Slot::Free);
                if res.is_ok() {
                    model.slots[ch] = Slot::Com(tier, r);
                }
            }
            3..=6 => {
                let band = if rng.random_bool(0.05) {
                    Band::new(TOY.f_high_khz - 5_000, TOY.f_high_khz + 5_000).unwrap()
                } else {
                    random_band(&mut rng, TOY)
                };
                let start = now + rng.random_range(0..5);
                let dur = rng.random_range(1..120);
                let res = c.authorize_plain_at(&req(band, 0, start, dur), now);
                if !TOY.contains(&band) {
                    assert_eq!(res.unwrap_err(), Denied::BandOutsideManagedRange);
                } else if model.conflicts(&band, now) {
                    assert_eq!(res.unwrap_err(), Denied::BandConflictIu);
                } else {
                    let (g, report) = res.unwrap();
                    assert_eq!(g.expiry, start + dur.min(60) as u64);
                    assert!(report.entries.iter().all(|p| p.displaced != Tier::Iu));
                    model.grant(g.id, band, g.expiry);
                }
                if c.snapshot() == before {
                    assert!(model.matches(&c.database()));
                }
            }
            7..=8 => {
                now += rng.random_range(0..40);
                let expired: Vec<GrantId> = model
                    .grants
                    .iter()
                    .filter(|(_, (_, e))| *e <= now)
                    .map(|(g, _)| *g)
                    .collect();
                assert_eq!(c.expire_grants(now), expired.len());
                for g in expired {
                    model.drop_grant(&g);
                }
            }
            _ => {
                if let Some(&id) = model
                    .grants
                    .keys()
                    .nth(rng.random_range(0..model.grants.len().max(1)))
                {
                    assert!(c.release(&id));
                    model.drop_grant(&id);
                }
            }
        }
        assert!(model.matches(&c.database()), "step {step}");
        c.check_invariants().unwrap();
        // Tier safety against every grant still active at `now`.
        let db = c.database();
        for (band, _) in model.grants.values().filter(|(_, e)| *e > now) {
            for ch in db.channels() {
                if let Some(Occupant::Commercial { .. }) = ch.occupant {
                    assert!(
                        !ch.band.overlaps(band),
                        "step {step}: commercial inside {band}"
                    );
                }
            }
        }
    }
    assert_eq!(
        c.export_records().len(),
        parse_records(&c.persistent_state()).unwrap().len()
    );
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    needle.len() <= hay.len() && hay.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn persisted_state_holds_no_protocol_material() {
    let mut u = iu(7);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.log");
    let cfg = CoordinatorConfig::default();
    let c = Coordinator::new(
        cfg,
        vec![u.kp.public_key().clone()],
        RecordLog::open(&path).unwrap(),
    )
    .unwrap();
    let mut needles: Vec<Vec<u8>> = Vec::new();
    let id = scalar_to_bytes(&encode_iu_id(u.cred.iu_id()));
    needles.push(id.to_vec());
    needles.push(hex::encode(id).into_bytes());
    needles.push(u.cred.iu_id().as_bytes().to_vec());
    let cred = u.cred.to_bytes();
    for _ in 0..20 {
        let lo = u.rng.random_range(0..14u32) * W + CBRS.f_low_khz;
        let r = req(
            Band::new(lo, lo + W).unwrap(),
            u.rng.random_range(-90_000_000..90_000_000),
            NOW,
            600,
        );
        let (n, _) = c.issue_challenge("s").unwrap();
        let p = derive_presentation(u.kp.public_key(), &u.cred, &r, &n, &mut u.rng).unwrap();
        let bytes = serialize_presentation(&p);
        let (g, _) = c.authorize(&p, &r, &n).unwrap();
        c.release(&g.id);
        needles.push(n.as_bytes().to_vec());
        needles.push(hex::encode(n.as_bytes()).into_bytes());
        needles.extend(
            bytes[p.header_len()..]
                .chunks(8)
                .filter(|w| w.len() == 8)
                .map(<[u8]>::to_vec),
        );
    }
    needles.extend(cred.chunks(8).filter(|w| w.len() == 8).map(<[u8]>::to_vec));
    let on_disk = std::fs::read(&path).unwrap();
    assert_eq!(on_disk, c.persistent_state().into_bytes());
    for n in &needles {
        assert!(!contains(&on_disk, n), "found {}", hex::encode(n));
    }
    assert_eq!(
        parse_records(std::str::from_utf8(&on_disk).unwrap())
            .unwrap()
            .len(),
        20
    );
}

#[test]
fn records_from_one_credential_do_not_link() {
    let mut u = iu(8);
    let c = coordinator(CBRS, &u.kp);
    let reqs = [
        req(Band::new(3_560_000, 3_570_000).unwrap(), 10, NOW, 600),
        req(Band::new(3_600_000, 3_620_000).unwrap(), 20, NOW + 5, 300),
    ];
    for r in &reqs {
        let (n, _) = c.issue_challenge("s").unwrap();
        let p = derive_presentation(u.kp.public_key(), &u.cred, r, &n, &mut u.rng).unwrap();
        c.authorize_at(&p, r, &n, Instant::now(), NOW).unwrap();
    }
    let recs = c.export_records();
    assert_eq!(recs.len(), 2);
    for (rec, r) in recs.iter().zip(&reqs) {
        assert_eq!(
            (rec.band, rec.location, rec.time_window),
            (r.band(), r.location, r.time_window)
        );
    }
    // Pairwise audit: the only shared field is the coarse grant timestamp.
    let (a, b) = (&recs[0], &recs[1]);
    assert_ne!(a.band, b.band);
    assert_ne!(a.location, b.location);
    assert_ne!(a.time_window, b.time_window);
    let (la, lb) = (a.to_line(), b.to_line());
    let fa: Vec<&str> = la.split(',').collect();
    let fb: Vec<&str> = lb.split(',').collect();
    let shared: Vec<usize> = (0..7).filter(|&i| fa[i] == fb[i]).collect();
    assert!(shared.iter().all(|&i| i == 3 || i == 6), "{shared:?}");
}
