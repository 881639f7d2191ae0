//! Results files: CSV with a `#` metadata header, plus a gnuplot data file
//! next to it with the same columns.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

pub const COMMIT: &str = env!("IUGUARD_COMMIT");

/// Provenance written at the top of every results file.
#[derive(Clone, Debug)]
pub struct Header {
    pub benchmark: String,
    pub commit: String,
    /// SHA-256 of the benchmark's effective configuration.
    pub config_digest: String,
    pub host: String,
    pub load_model: String,
}

impl Header {
    pub fn new(benchmark: &str, config: &impl Serialize, load_model: &str) -> Self {
        let json = serde_json::to_vec(config).expect("bench config serializes");
        Self {
            benchmark: benchmark.to_string(),
            commit: COMMIT.to_string(),
            config_digest: hex::encode(Sha256::digest(&json)),
            host: host_description(),
            load_model: load_model.to_string(),
        }
    }

    fn lines(&self) -> Vec<String> {
        vec![
            format!("benchmark: {}", self.benchmark),
            format!("commit: {}", self.commit),
            format!("config_digest: {}", self.config_digest),
            format!("host: {}", self.host),
            format!("load_model: {}", self.load_model),
        ]
    }
}

pub fn host_description() -> String {
    let name = std::fs::read_to_string("/proc/sys/kernel/hostname")
        .map(|s| s.trim().to_string())
        .or_else(|_| std::env::var("HOSTNAME"))
        .unwrap_or_else(|_| "unknown-host".into());
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|s| {
            s.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1))
                .map(|m| m.trim().to_string())
        })
        .unwrap_or_else(|| "unknown cpu".into());
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    format!(
        "{name}; {} {}; {cpu}; {threads} hardware threads",
        std::env::consts::OS,
        std::env::consts::ARCH
    )
}

/// Writes `path` as CSV and `path` with extension `.dat` for gnuplot.
/// Returns the data file's path.
pub fn write_results<T: Serialize>(
    path: &Path,
    header: &Header,
    rows: &[T],
) -> anyhow::Result<PathBuf> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut csv_bytes = Vec::new();
    for l in header.lines() {
        writeln!(csv_bytes, "# {l}")?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut csv_bytes);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    std::fs::write(path, &csv_bytes)?;

    // The gnuplot file reuses the CSV body: same column order, whitespace
    // separated, empty fields as "NaN", column names commented.
    let body = String::from_utf8(csv_bytes)?;
    let mut dat = String::new();
    for l in header.lines() {
        dat.push_str(&format!("# {l}\n"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(body.as_bytes());
    let cols: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    dat.push_str(&format!("# {}\n", cols.join(" ")));
    for rec in reader.records() {
        let rec = rec?;
        let fields: Vec<String> = rec
            .iter()
            .map(|f| match f {
                "" => "NaN".to_string(),
                f if f.contains(char::is_whitespace) => format!("\"{f}\""),
                f => f.to_string(),
            })
            .collect();
        dat.push_str(&fields.join(" "));
        dat.push('\n');
    }
    let dat_path = path.with_extension("dat");
    std::fs::write(&dat_path, dat)?;
    Ok(dat_path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::BenchResult;

    #[test]
    fn csv_and_dat_carry_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/micro.csv");
        let rows = vec![
            BenchResult {
                scenario: "issue".into(),
                trials: 3,
                mean_ms: 1.5,
                p50_ms: 1.0,
                p95_ms: 2.0,
                payload_bytes: Some(400),
            },
            BenchResult {
                scenario: "verify".into(),
                trials: 3,
                mean_ms: 1.0,
                p50_ms: 1.0,
                p95_ms: 1.0,
                payload_bytes: None,
            },
        ];
        let h = Header::new("micro", &serde_json::json!({"trials": 3}), "sequential");
        let dat = write_results(&path, &h, &rows).unwrap();
        let csv = std::fs::read_to_string(&path).unwrap();
        assert!(csv.starts_with("# benchmark: micro\n# commit: "));
        assert!(csv.contains("config_digest: "));
        assert!(csv.contains("scenario,trials,mean_ms,p50_ms,p95_ms,payload_bytes\nissue,3,1.5,1.0,2.0,400\n"));
        let dat = std::fs::read_to_string(dat).unwrap();
        assert!(dat.contains("# scenario trials mean_ms p50_ms p95_ms payload_bytes\n"));
        assert!(dat.contains("verify 3 1.0 1.0 1.0 NaN\n"));
    }
}
