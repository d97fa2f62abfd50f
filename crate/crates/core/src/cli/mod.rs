//! Command implementations behind the `sgis` binary.
//!
//! Each command reads a TOML [`RunConfig`], writes its primary output
//! deterministically and keeps timing in a `.meta.json` sidecar.

mod compare;

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{Problem, RunConfig};
use crate::domain::{CostCounts, CostLedger, SessionLog, Setting};
use crate::error::{Error, Result};
use crate::io::{
    correlation_csv, read_session_log, write_meta, write_session_log, CorrelationSidecar, Method,
    ResultFile, RunMeta, RESULT_SCHEMA, RESULT_VERSION,
};
use crate::search::{
    correlation_report, deployment_objective, enumerate_baseline, iterative_is_baseline, sgis,
    ObjectiveSpec, ScoredCandidate, SgisResult,
};
use crate::simulator::generate_sessions;

pub use compare::{cmd_compare, CompareRow, Comparison};

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Runs `f` on a dedicated pool when a thread count is given.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn threads_used(threads: Option<usize>) -> usize {
    threads.unwrap_or_else(rayon::current_num_threads)
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Resolves an optional flag against the config's `[paths]` section.
pub fn pick_path(
    flag: Option<PathBuf>,
    from_config: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf> {
    flag.or_else(|| from_config.clone()).ok_or_else(|| {
        Error::InvalidConfig(format!("no {what} path given (flag or [paths] section)"))
    })
}

#[derive(Debug, Clone)]
pub struct GenSummary {
    pub path: PathBuf,
    pub n_sessions: usize,
    pub digest: String,
}

pub fn cmd_gen_sessions(config: &Path, out: &Path, ov: Overrides) -> Result<GenSummary> {
    let problem = RunConfig::load(config)?.resolve(ov.seed)?;
    let n = problem.search.n_sessions;
    let log = with_threads(ov.threads, || generate_sessions(n, problem.search.seed))??;
    let digest = write_session_log(&log, out)?;
    Ok(GenSummary {
        path: out.to_path_buf(),
        n_sessions: log.len(),
        digest,
    })
}

struct Prepared {
    problem: Problem,
    log: SessionLog,
    digest: String,
    objective: ObjectiveSpec,
}

fn prepare(config: &Path, log: &Path, ov: Overrides) -> Result<Prepared> {
    let problem = RunConfig::load(config)?.resolve(ov.seed)?;
    let (log, digest) = read_session_log(log)?;
    let objective = with_threads(ov.threads, || {
        deployment_objective(
            &log,
            &problem.deployment,
            &problem.simulator,
            problem.maximize,
            problem.constraints.clone(),
            &CostLedger::new(),
        )
    })??;
    Ok(Prepared {
        problem,
        log,
        digest,
        objective,
    })
}

impl Prepared {
    fn result_file(
        &self,
        method: Method,
        result: SgisResult,
        points_per_dim: Option<usize>,
        start: Option<Setting>,
    ) -> ResultFile {
        ResultFile {
            schema: RESULT_SCHEMA.to_string(),
            version: RESULT_VERSION,
            method,
            log_digest: self.digest.clone(),
            n_sessions: self.log.len(),
            space: self.problem.space.clone(),
            objective: self.objective.clone(),
            config: self.problem.search.clone(),
            deployment: self.problem.deployment.clone(),
            points_per_dim,
            start,
            result,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: Method,
    pub best: Option<ScoredCandidate>,
    pub initial_best_score: Option<f64>,
    pub ledger: CostCounts,
    pub n_sessions: usize,
    /// Replays a full enumeration at the dense resolution `d(c-1)+1` would need.
    pub full_enumeration_replays: Option<u128>,
    pub warnings: Vec<String>,
}

impl std::fmt::Display for RunSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        match &self.best {
            Some(b) => {
                writeln!(f, "best setting: {}", b.setting)?;
                writeln!(
                    f,
                    "  score {:.4}  dRPM {:+.3}%  dClicks {:+.3}%  dIY {:+.3}%  dRevenue {:+.3}%",
                    b.score.unwrap_or(f64::NAN),
                    b.delta.d_rpm,
                    b.delta.d_clicks,
                    b.delta.d_iy,
                    b.delta.d_revenue
                )?;
            }
            None => writeln!(f, "no feasible setting found")?,
        }
        if let Some(s) = self.initial_best_score {
            writeln!(f, "initial-stage best score: {s:.4}")?;
        }
        writeln!(
            f,
            "replays: {}  reweighs: {}  settings simulated: {}  IS-evaluated: {}  iterations: {}",
            self.ledger.replay_count,
            self.ledger.is_reweigh_count,
            self.ledger.settings_simulated,
            self.ledger.settings_is_evaluated,
            self.ledger.iterations
        )?;
        if let Some(full) = self.full_enumeration_replays {
            let ratio = full as f64 / self.ledger.replay_count.max(1) as f64;
            writeln!(
                f,
                "full enumeration at the same resolution: {full} replays ({ratio:.1}x)"
            )?;
        }
        Ok(())
    }
}

fn finish(
    prepared: &Prepared,
    file: ResultFile,
    out: &Path,
    started: Instant,
    threads: Option<usize>,
    warnings: Vec<String>,
) -> Result<RunSummary> {
    file.write(out)?;
    write_meta(
        out,
        &RunMeta {
            wall_time_ms: started.elapsed().as_millis() as u64,
            threads: threads_used(threads),
            finished_unix_s: unix_now(),
        },
    )?;
    let cfg = &prepared.problem.search;
    let full = (file.method == Method::Sgis).then(|| {
        let res = (cfg.d * (cfg.c - 1) + 1) as u128;
        res.saturating_pow(cfg.m as u32)
            .saturating_mul(prepared.log.len() as u128)
    });
    let summary = RunSummary {
        method: file.method,
        best: file.result.best().cloned(),
        initial_best_score: file.result.initial_best_score(),
        ledger: file.result.ledger,
        n_sessions: prepared.log.len(),
        full_enumeration_replays: full,
        warnings,
    };
    if summary.best.is_none() {
        return Err(Error::EmptyPool);
    }
    Ok(summary)
}

pub fn cmd_sgis(config: &Path, log: &Path, out: &Path, ov: Overrides) -> Result<RunSummary> {
    let started = Instant::now();
    let p = prepare(config, log, ov)?;
    let result = with_threads(ov.threads, || {
        sgis(
            &p.log,
            &p.problem.space,
            &p.problem.simulator,
            &p.objective,
            &p.problem.search,
            &CostLedger::new(),
        )
    })??;
    let file = p.result_file(Method::Sgis, result, None, None);
    finish(&p, file, out, started, ov.threads, vec![])
}

pub fn cmd_enumerate(
    config: &Path,
    log: &Path,
    points_per_dim: usize,
    out: &Path,
    ov: Overrides,
) -> Result<RunSummary> {
    let started = Instant::now();
    let p = prepare(config, log, ov)?;
    let result = with_threads(ov.threads, || {
        enumerate_baseline(
            &p.log,
            &p.problem.space,
            &p.problem.simulator,
            &p.objective,
            points_per_dim,
            p.problem.search.k,
            p.problem.search.max_grid,
            &CostLedger::new(),
        )
    })??;
    let file = p.result_file(Method::Enumerate, result, Some(points_per_dim), None);
    finish(&p, file, out, started, ov.threads, vec![])
}

pub fn cmd_is_baseline(
    config: &Path,
    log: &Path,
    start: &[f64],
    out: &Path,
    ov: Overrides,
) -> Result<RunSummary> {
    let started = Instant::now();
    let p = prepare(config, log, ov)?;
    let (start, clipped) = p.problem.space.make_setting(start)?;
    let mut warnings = vec![];
    if clipped {
        warnings.push(format!("start clipped into the parameter space: {start}"));
    }
    let result = with_threads(ov.threads, || {
        iterative_is_baseline(
            &p.log,
            &p.problem.space,
            &p.problem.simulator,
            &p.objective,
            &start,
            &p.problem.search,
            &CostLedger::new(),
        )
    })??;
    let file = p.result_file(Method::IsBaseline, result, None, Some(start));
    finish(&p, file, out, started, ov.threads, warnings)
}

#[derive(Debug, Clone)]
pub struct CorrelationSummary {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
    pub rows: usize,
    pub r: Option<f64>,
    pub reason: Option<String>,
}

/// Sidecar path of a scatter CSV: same stem, `.json` extension.
pub fn correlation_sidecar_path(csv: &Path) -> Result<PathBuf> {
    if csv.extension().is_some_and(|e| e == "json") {
        return Err(Error::InvalidConfig(
            "scatter output must not end in .json (the sidecar takes that name)".into(),
        ));
    }
    Ok(csv.with_extension("json"))
}

pub fn cmd_correlation(
    config: &Path,
    log: &Path,
    center: Option<&[f64]>,
    out: &Path,
    ov: Overrides,
) -> Result<CorrelationSummary> {
    let problem = RunConfig::load(config)?.resolve(ov.seed)?;
    let sidecar = correlation_sidecar_path(out)?;
    let (log, digest) = read_session_log(log)?;
    let center = match center {
        Some(c) => problem.space.setting(c)?,
        None => problem.correlation_center.clone(),
    };
    let report = with_threads(ov.threads, || {
        correlation_report(
            &log,
            &problem.space,
            &problem.simulator,
            &center,
            &problem.search.sigma,
            problem.n_probe,
            &problem.search,
            problem.search.seed,
            &CostLedger::new(),
        )
    })??;
    std::fs::write(out, correlation_csv(&problem.space, &report))
        .map_err(|e| Error::io(format!("writing {}", out.display()), e))?;
    let meta = CorrelationSidecar {
        log_digest: digest,
        n_probe: report.pairs.len(),
        n_used: report.pairs.iter().filter(|p| !p.excluded).count(),
        r: report.r,
        reason: report.reason.clone(),
    };
    let mut text = serde_json::to_string_pretty(&meta)?;
    text.push('\n');
    std::fs::write(&sidecar, text)
        .map_err(|e| Error::io(format!("writing {}", sidecar.display()), e))?;
    Ok(CorrelationSummary {
        csv: out.to_path_buf(),
        sidecar,
        rows: report.pairs.len(),
        r: report.r,
        reason: report.reason,
    })
}

/// Parses `"1.0,2.5"` into numbers.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad number `{t}`: {e}")))
        })
        .collect()
}
