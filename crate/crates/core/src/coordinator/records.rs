//! The only state the coordinator persists: one line per grant.
//!
//! ```text
//! iuguard-records v1
//! f_low_khz,f_high_khz,lat_microdeg,lon_microdeg,start_unix_s,duration_s,granted_at_unix_s
//! ```

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::band::Band;
use crate::error::{Error, Result};
use crate::presentation::{Location, TimeWindow};

pub const RECORDS_HEADER: &str = "iuguard-records v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MinimalRecord {
    pub band: Band,
    pub location: Location,
    pub time_window: TimeWindow,
    pub granted_at: u64,
}

impl MinimalRecord {
    pub fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.band.f_low_khz,
            self.band.f_high_khz,
            self.location.lat_microdeg,
            self.location.lon_microdeg,
            self.time_window.start_unix_s,
            self.time_window.duration_s,
            self.granted_at
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(Error::Decode("record field count"));
        }
        let bad = |_| Error::Decode("record field");
        Ok(Self {
            band: Band::new(f[0].parse().map_err(bad)?, f[1].parse().map_err(bad)?)
                .ok_or(Error::Decode("record band"))?,
            location: Location {
                lat_microdeg: f[2].parse().map_err(bad)?,
                lon_microdeg: f[3].parse().map_err(bad)?,
            },
            time_window: TimeWindow {
                start_unix_s: f[4].parse().map_err(bad)?,
                duration_s: f[5].parse().map_err(bad)?,
            },
            granted_at: f[6].parse().map_err(bad)?,
        })
    }
}

pub fn parse_records(text: &str) -> Result<Vec<MinimalRecord>> {
    let mut lines = text.lines();
    if lines.next() != Some(RECORDS_HEADER) {
        return Err(Error::Decode("records header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(MinimalRecord::parse_line)
        .collect()
}

/// Append-only record log, optionally mirrored to a file.
#[derive(Debug, Default)]
pub struct RecordLog {
    records: Vec<MinimalRecord>,
    file: Option<(PathBuf, BufWriter<File>)>,
}

impl RecordLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens or creates `path`, loading existing records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let records = match std::fs::read_to_string(path) {
            Ok(text) if !text.is_empty() => parse_records(&text)?,
            Ok(_) => Vec::new(),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let fresh = std::fs::metadata(path)
            .map(|m| m.len() == 0)
            .unwrap_or(true);
        let f = OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = BufWriter::new(f);
        if fresh {
            writeln!(w, "{RECORDS_HEADER}")?;
            w.flush()?;
        }
        Ok(Self {
            records,
            file: Some((path.to_path_buf(), w)),
        })
    }

    pub fn append(&mut self, r: MinimalRecord) -> Result<()> {
        if let Some((_, w)) = &mut self.file {
            writeln!(w, "{}", r.to_line())?;
            w.flush()?;
        }
        self.records.push(r);
        Ok(())
    }

    pub fn records(&self) -> &[MinimalRecord] {
        &self.records
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    /// The exact bytes this log would persist.
    pub fn to_file_string(&self) -> String {
        let mut s = format!("{RECORDS_HEADER}\n");
        for r in &self.records {
            s.push_str(&r.to_line());
            s.push('\n');
        }
        s
    }
}
