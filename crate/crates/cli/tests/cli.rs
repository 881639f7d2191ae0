use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use iuguard_cli::exit;

const BIN: &str = env!("CARGO_BIN_EXE_iuguard");

fn fixture_registry() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/registry.jsonl")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> u8 {
    o.status.code().unwrap() as u8
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn serve(dir: &Path) -> Server {
    let mut child = Command::new(BIN)
        .current_dir(dir)
        .arg("serve")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    for _ in 0..3 {
        let l = lines.next().unwrap().unwrap();
        assert!(l.starts_with("listening on "), "{l}");
    }
    Server(child)
}

fn init() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let reg = fixture_registry();
    let o = run(dir.path(), &["init", "--dir", ".", "--registry", reg.to_str().unwrap()]);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

const WHERE: [&str; 4] = ["--lat", "38.9", "--lon", "-77.03"];

#[test]
fn issue_then_request_access_prints_a_grant() {
    let dir = init();
    let _s = serve(dir.path());
    let o = run(dir.path(), &["issue", "--iu", "radar-01"]);
    assert_eq!(code(&o), exit::OK);
    assert!(dir.path().join("credentials/radar-01.cred").exists());

    let mut args = vec!["request-access", "--iu", "radar-01", "--band", "3550000:3560000", "--dur", "600"];
    args.extend(WHERE);
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let id = out.lines().next().unwrap().strip_prefix("grant ").unwrap();
    assert_eq!(id.len(), 32);

    // The same channel is now held.
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), exit::BAND_DENIED);
    let o = run(dir.path(), &["release", "--grant", id]);
    assert_eq!(code(&o), exit::OK);
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), exit::OK);
}

#[test]
fn out_of_authorization_fails_locally_without_contacting_anything() {
    let dir = init();
    // No services are running: a transport attempt would exit with TRANSPORT.
    let cfg = std::fs::read_to_string(dir.path().join("iuguard.toml")).unwrap();
    assert!(cfg.contains("[client]"));
    {
        let _s = serve(dir.path());
        assert_eq!(code(&run(dir.path(), &["issue", "--iu", "radar-02"])), exit::OK);
    }
    let mut args = vec!["request-access", "--iu", "radar-02", "--band", "3649000:3651000"];
    args.extend(WHERE);
    let o = run(dir.path(), &args);
    assert_eq!(code(&o), exit::OUT_OF_AUTHORIZATION);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nothing sent"));

    let mut args = vec!["request-access", "--iu", "radar-02", "--band", "3600000:3610000"];
    args.extend(WHERE);
    assert_eq!(code(&run(dir.path(), &args)), exit::TRANSPORT);
}

#[test]
fn baseline_verbs_and_error_classes() {
    let dir = init();
    let _s = serve(dir.path());
    let o = run(dir.path(), &["baseline", "login", "--iu", "radar-02"]);
    assert_eq!(code(&o), exit::OK);
    let token = stdout(&o).split_whitespace().nth(1).unwrap().to_string();

    let mut args = vec!["baseline", "report", "--iu", "radar-02", "--session", &token, "--band", "3600000:3610000"];
    args.extend(WHERE);
    assert_eq!(code(&run(dir.path(), &args)), exit::OK);

    let mut args = vec!["baseline", "report", "--iu", "radar-02", "--band", "3690000:3700000"];
    args.extend(WHERE);
    assert_eq!(code(&run(dir.path(), &args)), exit::OUT_OF_AUTHORIZATION);

    let mut args = vec!["baseline", "report", "--iu", "radar-02", "--session", "00", "--band", "3620000:3630000"];
    args.extend(WHERE);
    assert_eq!(code(&run(dir.path(), &args)), exit::FRESHNESS);

    std::fs::write(dir.path().join("secrets/radar-02.password"), "wrong").unwrap();
    let o = run(dir.path(), &["baseline", "login", "--iu", "radar-02"]);
    assert_eq!(code(&o), exit::AUTH);

    // Missing credential and missing config are local failures.
    let mut args = vec!["request-access", "--iu", "radar-03", "--band", "3600000:3610000"];
    args.extend(WHERE);
    assert_eq!(code(&run(dir.path(), &args)), exit::LOCAL);
    let o = run(dir.path(), &["issue", "--iu", "radar-01", "--config", "absent.toml"]);
    assert_eq!(code(&o), exit::LOCAL);
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["bench", "micro", "--trials", "0"][..],
        &["bench", "e2e", "--trials", "0"],
        &["request-access", "--iu", "x", "--band", "5:3", "--lat", "0", "--lon", "0"],
        &["frobnicate"],
    ] {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), exit::USAGE, "{args:?}");
    }
}

#[test]
fn micro_bench_writes_csv_and_dat() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["bench", "micro", "--trials", "3", "--seed", "9", "--out", "r/micro.csv"],
    );
    assert_eq!(code(&o), exit::OK, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r/micro.csv")).unwrap();
    for h in ["# benchmark: micro", "# commit: ", "# config_digest: ", "# host: "] {
        assert!(csv.contains(h), "{h}");
    }
    let rows: Vec<_> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "scenario,trials,mean_ms,p50_ms,p95_ms,payload_bytes");
    assert!(rows[1].starts_with("issue,3,"));
    assert!(rows[2].starts_with("present,3,"));
    assert!(rows[3].starts_with("verify,3,"));
    assert!(dir.path().join("r/micro.dat").exists());
}
