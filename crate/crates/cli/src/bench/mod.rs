//! Benchmark harness: local primitive timings, the end-to-end comparison
//! against the baseline, and the concurrency sweep.

pub mod e2e;
pub mod load;
pub mod micro;

use iuguard_core::band::Band;
use iuguard_core::coordinator::{unix_now, CBRS_BAND};
use iuguard_core::credential::registry::{Antenna, DeviceType, RegistryRecord};
use iuguard_core::credential::Registry;
use iuguard_core::presentation::{AccessRequest, Location, TimeWindow};
use rand::{CryptoRng, Rng, RngExt};

/// `n` registry entries `bench-iu-{i}` with random secrets and the bands
/// `band_for(i)`.
pub fn synthetic_registry<R: CryptoRng + ?Sized>(
    n: usize,
    band_for: impl Fn(usize) -> Band,
    rng: &mut R,
) -> Registry {
    let records = (0..n)
        .map(|i| {
            let mut secret = [0u8; 32];
            rng.fill_bytes(&mut secret);
            let band = band_for(i);
            RegistryRecord {
                iu_id: iu_name(i),
                device_type: DeviceType::GroundRadar,
                antenna: Antenna {
                    gain_dbi: 30.0,
                    orientation_deg: 0.0,
                    height_m: 10.0,
                },
                max_power_dbm: 60.0,
                authorized_f_low_khz: band.f_low_khz,
                authorized_f_high_khz: band.f_high_khz,
                system_type: "synthetic".into(),
                enrollment_secret: secret,
            }
        })
        .collect();
    Registry::from_records(records).expect("synthetic registry is well formed")
}

pub fn iu_name(i: usize) -> String {
    format!("bench-iu-{i}")
}

pub fn request(band: Band) -> AccessRequest {
    AccessRequest::new(
        band,
        Location {
            lat_microdeg: 38_889_000,
            lon_microdeg: -77_035_000,
        },
        TimeWindow {
            start_unix_s: unix_now(),
            duration_s: 600,
        },
    )
}

/// A random authorized band inside CBRS and a random request inside it.
pub fn random_pair<R: Rng + ?Sized>(rng: &mut R) -> (Band, Band) {
    let lo = rng.random_range(CBRS_BAND.f_low_khz..CBRS_BAND.f_high_khz - 1);
    let hi = rng.random_range(lo + 1..=CBRS_BAND.f_high_khz);
    let rlo = rng.random_range(lo..hi);
    let rhi = rng.random_range(rlo + 1..=hi);
    (Band::new(lo, hi).unwrap(), Band::new(rlo, rhi).unwrap())
}
