//! On-disk formats: session logs (JSON lines), result documents and scatter CSV.
//!
//! Session log, one session per line, no header:
//!
//! ```text
//! {"v":1,"session_id":0,"user_features":[0.1,-0.3,1.2,0.4],"candidates":[[1.7,0.42,-0.9],...]}
//! ```
//!
//! `candidates` holds `[bid, quality, base_click_logit]` triples.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{CandidateAd, ParameterSpace, Session, SessionLog, Setting, SgisConfig};
use crate::error::{Error, Result};
use crate::search::{CorrelationReport, ObjectiveSpec, SgisResult};

pub const SESSION_LOG_VERSION: u32 = 1;
pub const RESULT_SCHEMA: &str = "sgis-result";
pub const RESULT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionLine {
    v: u32,
    session_id: u64,
    user_features: Vec<f64>,
    candidates: Vec<[f64; 3]>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn encode_session_log(log: &SessionLog) -> String {
    let mut out = String::new();
    for s in log.sessions() {
        let line = SessionLine {
            v: SESSION_LOG_VERSION,
            session_id: s.session_id,
            user_features: s.user_features.clone(),
            candidates: s
                .candidates
                .iter()
                .map(|c| [c.bid, c.quality, c.base_click_logit])
                .collect(),
        };
        out.push_str(&serde_json::to_string(&line).expect("session serializes"));
        out.push('\n');
    }
    out
}

pub fn decode_session_log(text: &str) -> Result<SessionLog> {
    let mut sessions = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let rec: SessionLine = serde_json::from_str(raw).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        if rec.v != SESSION_LOG_VERSION {
            return Err(Error::Parse {
                line,
                message: format!("unsupported session log version {}", rec.v),
            });
        }
        let session = Session {
            session_id: rec.session_id,
            user_features: rec.user_features,
            candidates: rec
                .candidates
                .into_iter()
                .map(|[bid, quality, base_click_logit]| CandidateAd {
                    bid,
                    quality,
                    base_click_logit,
                })
                .collect(),
        };
        SessionLog::new(vec![session.clone()]).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        sessions.push(session);
    }
    SessionLog::new(sessions)
}

/// Writes the log and returns the digest of the written bytes.
pub fn write_session_log(log: &SessionLog, path: &Path) -> Result<String> {
    let text = encode_session_log(log);
    std::fs::write(path, &text)
        .map_err(|e| Error::io(format!("writing session log {}", path.display()), e))?;
    Ok(sha256_hex(text.as_bytes()))
}

/// Reads a log and the digest of its bytes.
pub fn read_session_log(path: &Path) -> Result<(SessionLog, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading session log {}", path.display()), e))?;
    Ok((decode_session_log(&text)?, sha256_hex(text.as_bytes())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sgis,
    Enumerate,
    IsBaseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sgis => "sgis",
            Method::Enumerate => "enumerate",
            Method::IsBaseline => "is-baseline",
        }
    }
}

/// Everything a run produced, minus timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    pub schema: String,
    pub version: u32,
    pub method: Method,
    pub log_digest: String,
    pub n_sessions: usize,
    pub space: ParameterSpace,
    pub objective: ObjectiveSpec,
    pub config: SgisConfig,
    pub deployment: Setting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_per_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Setting>,
    pub result: SgisResult,
}

impl ResultFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: ResultFile = serde_json::from_str(text)?;
        if r.schema != RESULT_SCHEMA || r.version != RESULT_VERSION {
            return Err(Error::Incompatible(format!(
                "unsupported result schema {} v{}",
                r.schema, r.version
            )));
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(format!("writing result {}", path.display()), e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading result {}", path.display()), e))?;
        Self::from_json(&text)
    }
}

/// Non-deterministic run metadata kept beside a primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub wall_time_ms: u64,
    pub threads: usize,
    pub finished_unix_s: u64,
}

pub fn meta_path(primary: &Path) -> std::path::PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

pub fn write_meta(primary: &Path, meta: &RunMeta) -> Result<()> {
    let path = meta_path(primary);
    let text = serde_json::to_string_pretty(meta)?;
    std::fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_meta(primary: &Path) -> Option<RunMeta> {
    let text = std::fs::read_to_string(meta_path(primary)).ok()?;
    serde_json::from_str(&text).ok()
}

/// Header `<dim names>,is_delta_iy,sim_delta_iy`, one row per probe.
pub fn correlation_csv(space: &ParameterSpace, report: &CorrelationReport) -> String {
    let mut out = String::new();
    for name in space.names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("is_delta_iy,sim_delta_iy\n");
    for p in &report.pairs {
        for v in p.setting.values() {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{},{}", p.is_delta_iy, p.sim_delta_iy);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSidecar {
    pub log_digest: String,
    pub n_probe: usize,
    pub n_used: usize,
    pub r: Option<f64>,
    pub reason: Option<String>,
}
