use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use iuguard_cli::bench::{e2e, load, micro};
use iuguard_cli::exit::{self, Failure};
use iuguard_cli::report::{write_results, Header};
use iuguard_cli::setup::{self, InitOptions};
use iuguard_cli::{commands, stats::SweepPoint};
use iuguard_core::band::Band;
use iuguard_core::coordinator::unix_now;
use iuguard_core::presentation::{AccessRequest, Location, TimeWindow};
use iuguard_wire::config::{start_ca, start_iic, start_scs, Config};
use iuguard_wire::messages::AccessGrantedMsg;

#[derive(Parser)]
#[command(name = "iuguard", version, about = "Privacy-preserving incumbent access to shared spectrum")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Create keys, pins, accounts, secrets and iuguard.toml in a directory.
    Init {
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        /// Incumbent registry to enroll.
        #[arg(long)]
        registry: PathBuf,
        /// CA, SCS and IIC listen on this port and the next two; free
        /// ports are chosen when omitted.
        #[arg(long)]
        base_port: Option<u16>,
    },
    /// Run the CA, SCS and IIC services until interrupted.
    Serve {
        #[command(flatten)]
        cfg: ConfigArg,
        /// Run only these services.
        #[arg(long, value_delimiter = ',', value_parser = ["ca", "scs", "iic"])]
        only: Vec<String>,
    },
    /// Obtain a credential through blind issuance.
    Issue {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        iu: String,
    },
    /// Anonymous spectrum access with a stored credential.
    RequestAccess {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        iu: String,
        #[command(flatten)]
        req: RequestArgs,
    },
    /// Release a grant early.
    Release {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        grant: String,
    },
    /// The account-password baseline through the IIC.
    Baseline {
        #[command(subcommand)]
        cmd: BaselineCmd,
    },
    /// Benchmarks; results go to --out as CSV plus a gnuplot .dat file.
    Bench {
        #[command(subcommand)]
        cmd: BenchCmd,
    },
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long, default_value = setup::CONFIG_FILE)]
    config: PathBuf,
}

#[derive(Args)]
struct RequestArgs {
    /// Requested band in kHz, as low:high.
    #[arg(long, value_parser = parse_band)]
    band: Band,
    /// Latitude in degrees.
    #[arg(long, allow_hyphen_values = true)]
    lat: f64,
    /// Longitude in degrees.
    #[arg(long, allow_hyphen_values = true)]
    lon: f64,
    /// Start time, Unix seconds. Defaults to now.
    #[arg(long)]
    start: Option<u64>,
    /// Duration in seconds.
    #[arg(long, default_value_t = 600)]
    dur: u32,
}

#[derive(Subcommand)]
enum BaselineCmd {
    /// Log in and print a session token.
    Login {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        iu: String,
    },
    /// Report spectrum use; logs in first unless --session is given.
    Report {
        #[command(flatten)]
        cfg: ConfigArg,
        #[arg(long)]
        iu: String,
        #[arg(long)]
        session: Option<String>,
        #[command(flatten)]
        req: RequestArgs,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Issue, Present and Verify in process.
    Micro {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Deterministic mode: identical sizes on every run.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "results/micro.csv")]
        out: PathBuf,
    },
    /// Baseline versus IU-GUARD over loopback TLS, six rows.
    E2e {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "results/e2e.csv")]
        out: PathBuf,
    },
    /// Closed-loop concurrency sweep.
    Load {
        /// Comma-separated user counts.
        #[arg(long, value_delimiter = ',', default_values_t = load::USER_COUNTS)]
        users: Vec<usize>,
        /// Skip points above this many users.
        #[arg(long, default_value_t = 5000)]
        max_users: usize,
        /// Wall-time window per point, seconds.
        #[arg(long, default_value_t = 10)]
        window_s: u64,
        /// Run only the baseline path.
        #[arg(long, conflicts_with = "both")]
        baseline: bool,
        /// Run both paths at every point.
        #[arg(long)]
        both: bool,
        #[arg(long, default_value = "results/load.csv")]
        out: PathBuf,
    },
}

fn parse_band(s: &str) -> Result<Band, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected low:high in kHz")?;
    let lo: u32 = lo.trim().parse().map_err(|e| format!("low: {e}"))?;
    let hi: u32 = hi.trim().parse().map_err(|e| format!("high: {e}"))?;
    Band::new(lo, hi).ok_or_else(|| "low must be below high".into())
}

fn microdeg(deg: f64) -> i64 {
    (deg * 1e6).round() as i64
}

impl RequestArgs {
    fn request(&self) -> AccessRequest {
        AccessRequest::new(
            self.band,
            Location {
                lat_microdeg: microdeg(self.lat),
                lon_microdeg: microdeg(self.lon),
            },
            TimeWindow {
                start_unix_s: self.start.unwrap_or_else(unix_now),
                duration_s: self.dur,
            },
        )
    }
}

impl ConfigArg {
    fn load(&self) -> Result<Config, Failure> {
        Config::load(&self.config).map_err(Failure::local)
    }
}

fn print_grant(g: &AccessGrantedMsg) {
    println!("grant {}", g.grant.grant_id);
    println!(
        "band {}..{} kHz, expires at {}",
        g.grant.f_low_khz, g.grant.f_high_khz, g.grant.expiry_unix_s
    );
    for p in &g.preemption {
        println!("preempts {p:?}");
    }
}

fn bench_err(e: anyhow::Error) -> Failure {
    Failure::new(exit::BENCH_INVALID, format!("{e:#}"))
}

async fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Init {
            dir,
            registry,
            base_port,
        } => {
            let path = setup::init(&InitOptions {
                dir,
                registry,
                base_port,
                ..Default::default()
            })
            .map_err(|e| Failure::local(format!("{e:#}")))?;
            println!("wrote {}", path.display());
        }
        Cmd::Serve { cfg, only } => {
            tracing_subscriber::fmt()
                .with_max_level(tracing_subscriber::filter::LevelFilter::INFO)
                .with_writer(std::io::stderr)
                .init();
            let cfg = cfg.load()?;
            let on = |s: &str| only.is_empty() || only.iter().any(|o| o == s);
            let mut handles = Vec::new();
            if on("ca") {
                handles.push(start_ca(&cfg.ca).await.map_err(Failure::local)?.0);
            }
            if on("scs") {
                handles.push(start_scs(&cfg.scs).await.map_err(Failure::local)?.0);
            }
            if on("iic") {
                handles.push(start_iic(&cfg.iic).await.map_err(Failure::local)?.0);
            }
            for h in &handles {
                println!("listening on {}", h.addr());
            }
            tokio::signal::ctrl_c().await.map_err(Failure::local)?;
            for h in handles {
                h.shutdown().await;
            }
        }
        Cmd::Issue { cfg, iu } => {
            let path = commands::issue(&cfg.load()?.client, &iu).await?;
            println!("credential written to {}", path.display());
        }
        Cmd::RequestAccess { cfg, iu, req } => {
            let g = commands::request_access(&cfg.load()?.client, &iu, &req.request()).await?;
            print_grant(&g);
        }
        Cmd::Release { cfg, grant } => {
            commands::release(&cfg.load()?.client, &grant).await?;
            println!("released {grant}");
        }
        Cmd::Baseline { cmd } => match cmd {
            BaselineCmd::Login { cfg, iu } => {
                let s = commands::baseline_login(&cfg.load()?.client, &iu).await?;
                println!("session {} valid for {} s", s.session_token, s.expires_in_s);
            }
            BaselineCmd::Report {
                cfg,
                iu,
                session,
                req,
            } => {
                let g = commands::baseline_report(
                    &cfg.load()?.client,
                    &iu,
                    session.as_deref(),
                    &req.request(),
                )
                .await?;
                print_grant(&g);
            }
        },
        Cmd::Bench { cmd } => bench(cmd).await?,
    }
    Ok(())
}

async fn bench(cmd: BenchCmd) -> Result<(), Failure> {
    if let BenchCmd::Micro { trials: 0, .. } | BenchCmd::E2e { trials: 0, .. } = cmd {
        return Err(Failure::new(exit::USAGE, "trials must be at least 1"));
    }
    match cmd {
        BenchCmd::Micro { trials, seed, out } => {
            let opts = micro::MicroOptions { trials, seed };
            let r = tokio::task::spawn_blocking(move || micro::run(&opts).map(|r| (r, opts)))
                .await
                .map_err(Failure::local)?;
            let (r, opts) = r.map_err(bench_err)?;
            let mut rows = r.rows.clone();
            rows.push(r.present_verify.clone());
            let h = Header::new("micro", &opts, "sequential, in process");
            write_results(&out, &h, &rows).map_err(Failure::local)?;
            for row in &rows {
                println!(
                    "{:<16} mean {:8.2} ms  p50 {:8.2} ms  p95 {:8.2} ms",
                    row.scenario, row.mean_ms, row.p50_ms, row.p95_ms
                );
            }
            let (lo, hi) = (
                r.presentation_bytes.iter().min().unwrap(),
                r.presentation_bytes.iter().max().unwrap(),
            );
            println!("credential {} bytes, presentation {lo}..{hi} bytes", r.credential_bytes);
        }
        BenchCmd::E2e { trials, out } => {
            let opts = e2e::E2eOptions {
                trials,
                ..Default::default()
            };
            let rows = e2e::run(&opts).await.map_err(bench_err)?;
            let h = Header::new("e2e", &opts, "sequential, one client, loopback TLS");
            write_results(&out, &h, &rows).map_err(Failure::local)?;
            for row in &rows {
                println!(
                    "{:<32} mean {:8.2} ms  p50 {:8.2} ms  p95 {:8.2} ms",
                    row.scenario, row.mean_ms, row.p50_ms, row.p95_ms
                );
            }
        }
        BenchCmd::Load {
            users,
            max_users,
            window_s,
            baseline,
            both,
            out,
        } => {
            let opts = load::LoadOptions {
                user_counts: users,
                max_users,
                window: Duration::from_secs(window_s),
                iu_guard: !baseline || both,
                baseline: baseline || both,
                ..Default::default()
            };
            let points = load::run(&opts).await.map_err(bench_err)?;
            let h = Header::new("load", &opts, load::LOAD_MODEL);
            write_results(&out, &h, &points).map_err(Failure::local)?;
            for p in &points {
                println!(
                    "{:<9} {:>5} users  p95 {:9.1} ms  {:8.2} req/s  {} errors",
                    p.path, p.concurrent_users, p.p95_latency_ms, p.throughput_rps, p.error_count
                );
            }
            if let Some(p) = points.iter().find(|p: &&SweepPoint| !p.is_valid()) {
                return Err(Failure::new(
                    exit::BENCH_INVALID,
                    format!("{} point at {} users is invalid", p.path, p.concurrent_users),
                ));
            }
        }
    }
    Ok(())
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(()) => ExitCode::from(exit::OK),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
