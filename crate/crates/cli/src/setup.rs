//! `init`: a ready-to-serve directory with keys, pins, registry, accounts,
//! per-IU secrets and a config file.

use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};

use anyhow::Context;
use iuguard_core::coordinator::{CBRS_BAND, DEFAULT_CHANNEL_WIDTH_KHZ};
use iuguard_core::credential::issuers::issuers_to_string;
use iuguard_core::credential::{load_registry, Registry, MESSAGE_COUNT};
use iuguard_core::crypto::bbs::keygen;
use iuguard_wire::config::{CaConfig, ClientConfig, Config, IicConfig, ScsConfig};
use iuguard_wire::iic::{AccountStore, BaselineAccount, DEFAULT_ITERATIONS};
use iuguard_wire::Identity;
use rand::{Rng, RngExt};

pub const CONFIG_FILE: &str = "iuguard.toml";

#[derive(Clone, Debug)]
pub struct InitOptions {
    pub dir: PathBuf,
    pub registry: PathBuf,
    /// CA, SCS and IIC listen on this port and the next two. `None` picks
    /// free ephemeral ports.
    pub base_port: Option<u16>,
    pub pbkdf2_iterations: u32,
}

fn free_port() -> anyhow::Result<u16> {
    Ok(TcpListener::bind("127.0.0.1:0")?.local_addr()?.port())
}

fn write_private(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    use std::io::Write;
    let mut o = std::fs::OpenOptions::new();
    o.write(true).create(true).truncate(true);
    #[cfg(unix)]
    std::os::unix::fs::OpenOptionsExt::mode(&mut o, 0o600);
    o.open(path)
        .and_then(|mut f| f.write_all(bytes))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn secret_path(dir: &Path, iu: &str) -> PathBuf {
    dir.join(format!("{iu}.secret"))
}

pub fn password_path(dir: &Path, iu: &str) -> PathBuf {
    dir.join(format!("{iu}.password"))
}

pub fn credential_path(dir: &Path, iu: &str) -> PathBuf {
    dir.join(format!("{iu}.cred"))
}

/// Returns the path of the written config file.
pub fn init(opts: &InitOptions) -> anyhow::Result<PathBuf> {
    let d = &opts.dir;
    std::fs::create_dir_all(d.join("secrets"))?;
    std::fs::create_dir_all(d.join("credentials"))?;
    let registry: Registry = load_registry(&opts.registry)
        .with_context(|| format!("loading {}", opts.registry.display()))?;
    std::fs::write(d.join("registry.jsonl"), registry.to_file_string())?;

    let mut ids = Vec::new();
    for name in ["ca", "scs", "iic", "iu"] {
        let id = Identity::generate()?;
        id.save(d.join(format!("{name}.crt")), d.join(format!("{name}.key")))?;
        ids.push(id.pin());
    }
    let [ca_pin, scs_pin, iic_pin, iu_pin] = ids[..] else {
        unreachable!()
    };

    let mut rng = rand::rng();
    let mut seed = [0u8; 32];
    rng.fill_bytes(&mut seed);
    write_private(&d.join("ca.seed"), hex::encode(seed).as_bytes())?;
    let pk = keygen(&seed, MESSAGE_COUNT)?.public_key().clone();
    std::fs::write(d.join("issuers.txt"), issuers_to_string(&[pk]))?;

    let mut accounts = Vec::new();
    for r in registry.records() {
        let password: String = (0..24)
            .map(|_| char::from(b"abcdefghjkmnpqrstuvwxyz23456789"[rng.random_range(0..31)]))
            .collect();
        write_private(
            &secret_path(&d.join("secrets"), &r.iu_id),
            hex::encode(r.enrollment_secret).as_bytes(),
        )?;
        write_private(&password_path(&d.join("secrets"), &r.iu_id), password.as_bytes())?;
        accounts.push(BaselineAccount::new(
            &r.iu_id,
            &password,
            &r.iu_id,
            r.band(),
            opts.pbkdf2_iterations,
        ));
    }
    AccountStore::new(accounts)?.save(d.join("accounts.jsonl"))?;

    let ports = match opts.base_port {
        Some(p) => [p, p + 1, p + 2],
        None => [free_port()?, free_port()?, free_port()?],
    };
    let addr = |p: u16| SocketAddr::from(([127, 0, 0, 1], p));
    let cfg = Config {
        ca: CaConfig {
            listen: addr(ports[0]),
            cert: "ca.crt".into(),
            key: "ca.key".into(),
            signing_seed: "ca.seed".into(),
            registry: "registry.jsonl".into(),
            nonce_ttl_s: 60,
            client_pins: vec![iu_pin],
        },
        scs: ScsConfig {
            listen: addr(ports[1]),
            cert: "scs.crt".into(),
            key: "scs.key".into(),
            issuers: "issuers.txt".into(),
            records: "records.log".into(),
            managed_low_khz: CBRS_BAND.f_low_khz,
            managed_high_khz: CBRS_BAND.f_high_khz,
            channel_width_khz: DEFAULT_CHANNEL_WIDTH_KHZ,
            grant_cap_s: 3600,
            nonce_ttl_s: 60,
            rate_burst: 20,
            rate_per_second: 10.0,
            client_pins: vec![iu_pin],
            iic_pins: vec![iic_pin],
        },
        iic: IicConfig {
            listen: addr(ports[2]),
            cert: "iic.crt".into(),
            key: "iic.key".into(),
            accounts: "accounts.jsonl".into(),
            session_ttl_s: 900,
            scs_addr: addr(ports[1]),
            scs_pin,
            client_pins: vec![iu_pin],
        },
        client: ClientConfig {
            cert: "iu.crt".into(),
            key: "iu.key".into(),
            ca_addr: addr(ports[0]),
            ca_pin,
            scs_addr: addr(ports[1]),
            scs_pin,
            iic_addr: addr(ports[2]),
            iic_pin,
            issuers: "issuers.txt".into(),
            secrets_dir: "secrets".into(),
            credentials_dir: "credentials".into(),
            timeout_ms: 30_000,
        },
    };
    let path = d.join(CONFIG_FILE);
    std::fs::write(&path, cfg.to_toml())?;
    Ok(path)
}

impl Default for InitOptions {
    fn default() -> Self {
        Self {
            dir: ".".into(),
            registry: "registry.jsonl".into(),
            base_port: None,
            pbkdf2_iterations: DEFAULT_ITERATIONS,
        }
    }
}
