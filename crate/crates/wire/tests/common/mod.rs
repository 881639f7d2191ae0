#![allow(dead_code)]

use std::time::Duration;

use iuguard_core::band::Band;
use iuguard_core::coordinator::unix_now;
use iuguard_core::credential::registry::{Antenna, DeviceType, RegistryRecord};
use iuguard_core::credential::Registry;
use iuguard_core::presentation::{AccessRequest, Location, TimeWindow};
use iuguard_wire::iic::BaselineAccount;
use iuguard_wire::local::{LocalDeployment, LocalOptions};

pub const PASSWORD: &str = "hunter2-but-longer";

pub fn record(iu_id: &str, low: u32, high: u32, secret: u8) -> RegistryRecord {
    RegistryRecord {
        iu_id: iu_id.into(),
        device_type: DeviceType::GroundRadar,
        antenna: Antenna {
            gain_dbi: 30.0,
            orientation_deg: 0.0,
            height_m: 10.0,
        },
        max_power_dbm: 60.0,
        authorized_f_low_khz: low,
        authorized_f_high_khz: high,
        system_type: "test".into(),
        enrollment_secret: [secret; 32],
    }
}

pub fn registry() -> Registry {
    Registry::from_records(vec![
        record("radar-01", 3_550_000, 3_700_000, 1),
        record("radar-02", 3_600_000, 3_650_000, 2),
    ])
    .unwrap()
}

pub fn options() -> LocalOptions {
    let mut o = LocalOptions::new(registry());
    o.accounts = vec![
        BaselineAccount::new("alice", PASSWORD, "radar-01", Band::new(3_550_000, 3_700_000).unwrap(), 1000),
        BaselineAccount::new("bob", PASSWORD, "radar-02", Band::new(3_600_000, 3_650_000).unwrap(), 1000),
    ];
    o.client_timeout = Duration::from_secs(60);
    o
}

pub async fn deployment() -> LocalDeployment {
    LocalDeployment::start(options()).await.unwrap()
}

pub fn request(low: u32, high: u32) -> AccessRequest {
    AccessRequest::new(
        Band::new(low, high).unwrap(),
        Location {
            lat_microdeg: 32_715_000,
            lon_microdeg: -117_161_000,
        },
        TimeWindow {
            start_unix_s: unix_now(),
            duration_s: 600,
        },
    )
}
