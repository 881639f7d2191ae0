//! Incumbent registry: the authoritative source of each IU's band.
//!
//! File format: a `iuguard-registry v1` header line, then one JSON object per
//! line. Blank lines and lines starting with `#` are skipped.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};

pub const REGISTRY_HEADER: &str = "iuguard-registry v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceType {
    ShipborneRadar,
    GroundRadar,
    AirborneRadar,
    Telemetry,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Antenna {
    pub gain_dbi: f64,
    pub orientation_deg: f64,
    pub height_m: f64,
}

#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegistryRecord {
    pub iu_id: String,
    pub device_type: DeviceType,
    pub antenna: Antenna,
    pub max_power_dbm: f64,
    pub authorized_f_low_khz: u32,
    pub authorized_f_high_khz: u32,
    pub system_type: String,
    #[serde(with = "hex32")]
    pub enrollment_secret: [u8; 32],
}

impl std::fmt::Debug for RegistryRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RegistryRecord")
            .field("iu_id", &self.iu_id)
            .field("device_type", &self.device_type)
            .field("authorized_f_low_khz", &self.authorized_f_low_khz)
            .field("authorized_f_high_khz", &self.authorized_f_high_khz)
            .field("enrollment_secret", &"<redacted>")
            .finish_non_exhaustive()
    }
}

mod hex32 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8; 32], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(b))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 32], D::Error> {
        let s = String::deserialize(d)?;
        let v = hex::decode(&s).map_err(serde::de::Error::custom)?;
        v.try_into()
            .map_err(|_| serde::de::Error::custom("enrollment_secret must be 32 bytes"))
    }
}

impl RegistryRecord {
    pub fn band(&self) -> Band {
        Band {
            f_low_khz: self.authorized_f_low_khz,
            f_high_khz: self.authorized_f_high_khz,
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.iu_id.is_empty() {
            return Err("empty iu_id".into());
        }
        if self.authorized_f_low_khz >= self.authorized_f_high_khz {
            return Err(format!(
                "authorized_f_low_khz {} not below authorized_f_high_khz {}",
                self.authorized_f_low_khz, self.authorized_f_high_khz
            ));
        }
        let a = &self.antenna;
        if ![
            a.gain_dbi,
            a.orientation_deg,
            a.height_m,
            self.max_power_dbm,
        ]
        .iter()
        .all(|x| x.is_finite())
        {
            return Err("non-finite numeric field".into());
        }
        Ok(())
    }
}

/// Immutable after load; cheap to share behind an `Arc`.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    records: Vec<RegistryRecord>,
    by_id: HashMap<String, usize>,
}

impl Registry {
    pub fn from_records(records: Vec<RegistryRecord>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            r.validate().map_err(|reason| Error::Registry {
                line: i + 2,
                reason,
            })?;
            if by_id.insert(r.iu_id.clone(), i).is_some() {
                return Err(Error::Registry {
                    line: i + 2,
                    reason: format!("duplicate iu_id {:?}", r.iu_id),
                });
            }
        }
        Ok(Self { records, by_id })
    }

    pub fn get(&self, iu_id: &str) -> Option<&RegistryRecord> {
        self.by_id.get(iu_id).map(|&i| &self.records[i])
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[RegistryRecord] {
        &self.records
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::from(REGISTRY_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}

pub fn parse_registry(text: &str) -> Result<Registry> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .by_ref()
        .map(|(_, l)| l.trim())
        .find(|l| !l.is_empty())
        .unwrap_or_default();
    if header != REGISTRY_HEADER {
        return Err(Error::Registry {
            line: 1,
            reason: format!("unsupported header {header:?}"),
        });
    }
    let mut records = Vec::new();
    let mut by_id = HashMap::new();
    for (i, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let rec: RegistryRecord = serde_json::from_str(line).map_err(|e| Error::Registry {
            line: lineno,
            reason: e.to_string(),
        })?;
        rec.validate().map_err(|reason| Error::Registry {
            line: lineno,
            reason,
        })?;
        if by_id.insert(rec.iu_id.clone(), records.len()).is_some() {
            return Err(Error::Registry {
                line: lineno,
                reason: format!("duplicate iu_id {:?}", rec.iu_id),
            });
        }
        records.push(rec);
    }
    Ok(Registry { records, by_id })
}

pub fn load_registry(path: impl AsRef<Path>) -> Result<Registry> {
    parse_registry(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, lo: u32, hi: u32) -> String {
        format!(
            r#"{{"iu_id":"{id}","device_type":"ground-radar","antenna":{{"gain_dbi":30.0,"orientation_deg":90.0,"height_m":12.5}},"max_power_dbm":60.0,"authorized_f_low_khz":{lo},"authorized_f_high_khz":{hi},"system_type":"surveillance","enrollment_secret":"{}"}}"#,
            "ab".repeat(32)
        )
    }

    #[test]
    fn parses_and_indexes() {
        let text = format!(
            "{REGISTRY_HEADER}\n{}\n\n# comment\n{}\n",
            line("a", 1, 2),
            line("b", 3_550_000, 3_700_000)
        );
        let reg = parse_registry(&text).unwrap();
        assert_eq!(reg.len(), 2);
        assert_eq!(
            reg.get("b").unwrap().band(),
            Band::new(3_550_000, 3_700_000).unwrap()
        );
        assert!(reg.get("c").is_none());
        let again = parse_registry(&reg.to_file_string()).unwrap();
        assert_eq!(again.records(), reg.records());
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let empty_band = format!("{REGISTRY_HEADER}\n{}\n", line("a", 5, 5));
        assert!(matches!(
            parse_registry(&empty_band),
            Err(Error::Registry { line: 2, .. })
        ));
        let dup = format!(
            "{REGISTRY_HEADER}\n{}\n{}\n",
            line("a", 1, 2),
            line("a", 3, 4)
        );
        assert!(matches!(
            parse_registry(&dup),
            Err(Error::Registry { line: 3, .. })
        ));
        assert!(matches!(
            parse_registry(&format!("iuguard-registry v2\n{}\n", line("a", 1, 2))),
            Err(Error::Registry { line: 1, .. })
        ));
        let bad_secret = line("a", 1, 2).replace(&"ab".repeat(32), "abcd");
        assert!(parse_registry(&format!("{REGISTRY_HEADER}\n{bad_secret}\n")).is_err());
        let bad_device = line("a", 1, 2).replace("ground-radar", "toaster");
        assert!(parse_registry(&format!("{REGISTRY_HEADER}\n{bad_device}\n")).is_err());
    }

    #[test]
    fn debug_redacts_secret() {
        let reg = parse_registry(&format!("{REGISTRY_HEADER}\n{}\n", line("a", 1, 2))).unwrap();
        let s = format!("{:?}", reg.get("a").unwrap());
        assert!(!s.contains(&"ab".repeat(32)));
    }
}
