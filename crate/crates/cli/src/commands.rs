//! The operator verbs, each mapping failures to an exit class.

use std::path::PathBuf;

use iuguard_core::credential::issuers::load_issuers;
use iuguard_core::credential::Credential;
use iuguard_core::crypto::bbs::PublicKey;
use iuguard_core::presentation::{derive_presentation, AccessRequest};
use iuguard_wire::config::{read_seed, ClientConfig, Clients};
use iuguard_wire::messages::{AccessGrantedMsg, SessionMsg};

use crate::exit::{self, Failure};
use crate::setup::{credential_path, password_path, secret_path};

fn connect(cfg: &ClientConfig) -> Result<Clients, Failure> {
    cfg.connect().map_err(Failure::local)
}

fn issuers(cfg: &ClientConfig) -> Result<Vec<PublicKey>, Failure> {
    load_issuers(&cfg.issuers).map_err(|e| Failure::local(format!("{}: {e}", cfg.issuers.display())))
}

fn read_password(cfg: &ClientConfig, iu: &str) -> Result<String, Failure> {
    let p = password_path(&cfg.secrets_dir, iu);
    std::fs::read_to_string(&p)
        .map(|s| s.trim_end().to_string())
        .map_err(|e| Failure::local(format!("{}: {e}", p.display())))
}

/// Blind issuance; writes and returns the credential file.
pub async fn issue(cfg: &ClientConfig, iu: &str) -> Result<PathBuf, Failure> {
    let secret = read_seed(&secret_path(&cfg.secrets_dir, iu)).map_err(Failure::local)?;
    let pk = issuers(cfg)?
        .into_iter()
        .next()
        .ok_or_else(|| Failure::local("issuer list is empty"))?;
    let cred = connect(cfg)?.ca.issue(&pk, iu, &secret).await?;
    if !cred.verify(&pk) {
        return Err(Failure::new(exit::PROTOCOL, "issued credential does not verify"));
    }
    std::fs::create_dir_all(&cfg.credentials_dir).map_err(Failure::local)?;
    let path = credential_path(&cfg.credentials_dir, iu);
    cred.save(&path).map_err(Failure::local)?;
    Ok(path)
}

/// Challenge, derive, access. The containment check runs first, so an
/// out-of-authorization request never reaches the network.
pub async fn request_access(
    cfg: &ClientConfig,
    iu: &str,
    req: &AccessRequest,
) -> Result<AccessGrantedMsg, Failure> {
    req.validate()
        .map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    let path = credential_path(&cfg.credentials_dir, iu);
    let cred = Credential::load(&path)
        .map_err(|e| Failure::local(format!("{}: {e}", path.display())))?;
    if !cred.band().contains(&req.band()) {
        return Err(Failure::new(
            exit::OUT_OF_AUTHORIZATION,
            format!(
                "requested {}..{} kHz is outside the credential's {}..{} kHz; nothing sent",
                req.f_low_req_khz,
                req.f_high_req_khz,
                cred.band().f_low_khz,
                cred.band().f_high_khz
            ),
        ));
    }
    let pk = issuers(cfg)?
        .into_iter()
        .find(|k| k.fingerprint() == cred.issuer_fingerprint())
        .ok_or_else(|| Failure::local("credential issuer is not in the issuer list"))?;
    let c = connect(cfg)?;
    let nonce = c.scs.challenge().await?;
    let pres = derive_presentation(&pk, &cred, req, &nonce, &mut rand::rng())
        .map_err(|e| Failure::local(e.to_string()))?;
    Ok(c.scs.access(&pres, req, &nonce).await?)
}

pub async fn release(cfg: &ClientConfig, grant_id: &str) -> Result<(), Failure> {
    Ok(connect(cfg)?.scs.release(grant_id).await?)
}

pub async fn baseline_login(cfg: &ClientConfig, iu: &str) -> Result<SessionMsg, Failure> {
    let pw = read_password(cfg, iu)?;
    Ok(connect(cfg)?.iic.login(iu, &pw).await?)
}

/// Reports through the IIC, logging in first when no session is given.
pub async fn baseline_report(
    cfg: &ClientConfig,
    iu: &str,
    session: Option<&str>,
    req: &AccessRequest,
) -> Result<AccessGrantedMsg, Failure> {
    req.validate()
        .map_err(|e| Failure::new(exit::USAGE, e.to_string()))?;
    let c = connect(cfg)?;
    let token = match session {
        Some(t) => t.to_string(),
        None => c.iic.login(iu, &read_password(cfg, iu)?).await?.session_token,
    };
    Ok(c.iic.report(&token, req).await?)
}
