use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::band::Band;
use crate::canonical::to_canonical_string;
use crate::error::{Error, Result};
use crate::nonce::Nonce;

pub const MAX_LAT_MICRODEG: i64 = 90_000_000;
pub const MAX_LON_MICRODEG: i64 = 180_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Location {
    pub lat_microdeg: i64,
    pub lon_microdeg: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeWindow {
    pub start_unix_s: u64,
    pub duration_s: u32,
}

/// The plaintext operational request sent alongside a presentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessRequest {
    pub f_low_req_khz: u32,
    pub f_high_req_khz: u32,
    pub location: Location,
    pub time_window: TimeWindow,
}

impl AccessRequest {
    pub fn new(band: Band, location: Location, time_window: TimeWindow) -> Self {
        Self {
            f_low_req_khz: band.f_low_khz,
            f_high_req_khz: band.f_high_khz,
            location,
            time_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.f_low_req_khz >= self.f_high_req_khz {
            return Err(Error::InvalidRequest(
                "f_low_req_khz must be below f_high_req_khz",
            ));
        }
        if self.time_window.duration_s == 0 {
            return Err(Error::InvalidRequest("duration_s must be positive"));
        }
        if self.location.lat_microdeg.abs() > MAX_LAT_MICRODEG {
            return Err(Error::InvalidRequest("latitude out of range"));
        }
        if self.location.lon_microdeg.abs() > MAX_LON_MICRODEG {
            return Err(Error::InvalidRequest("longitude out of range"));
        }
        Ok(())
    }

    pub fn band(&self) -> Band {
        Band {
            f_low_khz: self.f_low_req_khz,
            f_high_khz: self.f_high_req_khz,
        }
    }

    /// Sorted-key compact JSON; the exact bytes bound into the context.
    pub fn canonical_json(&self) -> String {
        to_canonical_string(self).expect("request serializes")
    }
}

/// `SHA-256(domain ‖ len(json) ‖ json ‖ nonce ‖ issuer_fp)`.
pub fn presentation_context(req: &AccessRequest, nonce: &Nonce, issuer_fp: &[u8; 32]) -> [u8; 32] {
    let json = req.canonical_json();
    let mut h = Sha256::new();
    h.update(b"iuguard-presentation-context-v1");
    h.update((json.len() as u64).to_be_bytes());
    h.update(json.as_bytes());
    h.update(nonce.as_bytes());
    h.update(issuer_fp);
    h.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> AccessRequest {
        AccessRequest {
            f_low_req_khz: 3_550_000,
            f_high_req_khz: 3_560_000,
            location: Location {
                lat_microdeg: 36_850_000,
                lon_microdeg: -76_290_000,
            },
            time_window: TimeWindow {
                start_unix_s: 1_760_000_000,
                duration_s: 600,
            },
        }
    }

    #[test]
    fn canonical_json_shape() {
        assert_eq!(
            sample().canonical_json(),
            r#"{"f_high_req_khz":3560000,"f_low_req_khz":3550000,"location":{"lat_microdeg":36850000,"lon_microdeg":-76290000},"time_window":{"duration_s":600,"start_unix_s":1760000000}}"#
        );
    }

    #[test]
    fn validation() {
        assert!(sample().validate().is_ok());
        let mut r = sample();
        r.f_high_req_khz = r.f_low_req_khz;
        assert!(r.validate().is_err());
        let mut r = sample();
        r.time_window.duration_s = 0;
        assert!(r.validate().is_err());
        let mut r = sample();
        r.location.lat_microdeg = -90_000_001;
        assert!(r.validate().is_err());
        let mut r = sample();
        r.location.lon_microdeg = 180_000_000;
        assert!(r.validate().is_ok());
        r.location.lon_microdeg += 1;
        assert!(r.validate().is_err());
    }

    #[test]
    fn context_is_sensitive_to_every_field() {
        let n = Nonce([1; 32]);
        let fp = [2; 32];
        let base = presentation_context(&sample(), &n, &fp);
        assert_eq!(base, presentation_context(&sample(), &n, &fp));
        let edits: [fn(&mut AccessRequest); 6] = [
            |r| r.f_low_req_khz += 1,
            |r| r.f_high_req_khz += 1,
            |r| r.location.lat_microdeg += 1,
            |r| r.location.lon_microdeg += 1,
            |r| r.time_window.start_unix_s += 1,
            |r| r.time_window.duration_s += 1,
        ];
        for e in edits {
            let mut r = sample();
            e(&mut r);
            assert_ne!(presentation_context(&r, &n, &fp), base);
        }
        assert_ne!(presentation_context(&sample(), &Nonce([3; 32]), &fp), base);
        assert_ne!(presentation_context(&sample(), &n, &[4; 32]), base);
    }
}
