use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_meta, ResultFile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub method: String,
    pub best_score: Option<f64>,
    pub best_setting: Option<Vec<f64>>,
    pub replay_count: u64,
    pub is_reweigh_count: u64,
    pub wall_time_ms: Option<u64>,
    /// Replays relative to the SGIS row.
    pub replay_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    /// SGIS best score is at least its coarse-grid best.
    pub dominance: Option<bool>,
    /// Enumeration replays over SGIS replays.
    pub cost_ratio: Option<f64>,
    /// `cost_ratio >= 10`.
    pub cost_ordering: Option<bool>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,best_score,best_setting,replay_count,is_reweigh_count,wall_time_ms,replay_ratio\n",
        );
        for r in &self.rows {
            let setting = r
                .best_setting
                .as_ref()
                .map(|v| {
                    v.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method,
                r.best_score.map(|s| s.to_string()).unwrap_or_default(),
                setting,
                r.replay_count,
                r.is_reweigh_count,
                r.wall_time_ms.map(|w| w.to_string()).unwrap_or_default(),
                r.replay_ratio
            );
        }
        out
    }
}

impl std::fmt::Display for Comparison {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{:<12} {:>12} {:>14} {:>14} {:>10} {:>8}  best setting",
            "method", "best score", "replays", "reweighs", "wall ms", "ratio"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<12} {:>12} {:>14} {:>14} {:>10} {:>8.3}  {}",
                r.method,
                r.best_score
                    .map(|s| format!("{s:.4}"))
                    .unwrap_or_else(|| "-".into()),
                r.replay_count,
                r.is_reweigh_count,
                r.wall_time_ms
                    .map(|w| w.to_string())
                    .unwrap_or_else(|| "-".into()),
                r.replay_ratio,
                r.best_setting
                    .as_ref()
                    .map(|v| format!("{v:?}"))
                    .unwrap_or_else(|| "-".into())
            )?;
        }
        let flag = |b: Option<bool>| match b {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "n/a",
        };
        writeln!(
            f,
            "dominance (SGIS >= its coarse grid): {}",
            flag(self.dominance)
        )?;
        match self.cost_ratio {
            Some(r) => writeln!(
                f,
                "cost ordering (enumeration >= 10x SGIS replays): {} ({r:.1}x)",
                flag(self.cost_ordering)
            ),
            None => writeln!(f, "cost ordering: n/a"),
        }
    }
}

fn row(file: &ResultFile, path: &Path, sgis_replays: u64) -> CompareRow {
    let best = file.result.best();
    CompareRow {
        method: file.method.name().to_string(),
        best_score: best.and_then(|b| b.score),
        best_setting: best.map(|b| b.setting.values().to_vec()),
        replay_count: file.result.ledger.replay_count,
        is_reweigh_count: file.result.ledger.is_reweigh_count,
        wall_time_ms: read_meta(path).map(|m| m.wall_time_ms),
        replay_ratio: file.result.ledger.replay_count as f64 / sgis_replays.max(1) as f64,
    }
}

fn check_compatible(a: &ResultFile, b: &ResultFile) -> Result<()> {
    if a.log_digest != b.log_digest {
        return Err(Error::Incompatible(format!(
            "session log digests differ ({} vs {})",
            a.log_digest, b.log_digest
        )));
    }
    if a.space != b.space {
        return Err(Error::Incompatible("parameter spaces differ".into()));
    }
    if a.objective != b.objective {
        return Err(Error::Incompatible("objectives differ".into()));
    }
    Ok(())
}

/// One row per result file, guarded so only runs on the same log, space and
/// objective are compared.
pub fn cmd_compare(
    sgis: &Path,
    enumerate: Option<&Path>,
    is_baseline: Option<&Path>,
    out: Option<&Path>,
) -> Result<Comparison> {
    let reference = ResultFile::read(sgis)?;
    let sgis_replays = reference.result.ledger.replay_count;
    let mut rows = vec![row(&reference, sgis, sgis_replays)];
    let mut cost_ratio = None;
    for (path, is_enum) in [(enumerate, true), (is_baseline, false)] {
        let Some(path) = path else { continue };
        let other = ResultFile::read(path)?;
        check_compatible(&reference, &other)?;
        let r = row(&other, path, sgis_replays);
        if is_enum {
            cost_ratio = Some(r.replay_ratio);
        }
        rows.push(r);
    }
    let dominance = match (
        reference.result.best_score(),
        reference.result.initial_best_score(),
    ) {
        (Some(b), Some(i)) => Some(b >= i),
        _ => None,
    };
    let comparison = Comparison {
        rows,
        dominance,
        cost_ratio,
        cost_ordering: cost_ratio.map(|r| r >= 10.0),
    };
    if let Some(out) = out {
        std::fs::write(out, comparison.to_csv())
            .map_err(|e| Error::io(format!("writing {}", out.display()), e))?;
    }
    Ok(comparison)
}
