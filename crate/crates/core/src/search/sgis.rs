//! Simulator-guided importance sampling and its two baselines.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CostCounts, CostLedger, ParameterSpace, RandomizationPolicy, SessionLog, Setting, SgisConfig,
};
use crate::error::{Error, Result};
use crate::estimator::{is_art, DenseGridSpec};
use crate::rng::derive_seed;
use crate::simulator::{collect_artificial, evaluate_setting, simulate, Simulator};

use super::objective::{coarse_grid, top_k, ObjectiveSpec, ScoredCandidate, Source};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    Completed,
    /// Nothing feasible at this stage; the run stopped here.
    EmptyPool,
    /// Best direct score moved by less than epsilon.
    EarlyStop,
}

/// Health of the importance sweep around one center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterDiagnostics {
    pub center: Setting,
    pub grid_points: usize,
    pub min_ess: f64,
    pub max_capped_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// 0 is the coarse (or starting) stage.
    pub iteration: usize,
    pub centers: Vec<Setting>,
    pub diagnostics: Vec<CenterDiagnostics>,
    /// Best IS-scored settings proposed this iteration.
    pub is_top: Vec<ScoredCandidate>,
    /// Directly simulated candidates this iteration, best first.
    pub direct: Vec<ScoredCandidate>,
    /// Best direct score of the pool after this iteration.
    pub best_score: Option<f64>,
    pub status: IterationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgisResult {
    /// Best direct-simulation candidates, score descending.
    pub best_pool: Vec<ScoredCandidate>,
    pub iterations_run: usize,
    pub ledger: CostCounts,
    pub trace: Vec<IterationTrace>,
}

impl SgisResult {
    pub fn best(&self) -> Option<&ScoredCandidate> {
        self.best_pool.first()
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best().and_then(|c| c.score)
    }

    /// Best score of the coarse/starting stage.
    pub fn initial_best_score(&self) -> Option<f64> {
        self.trace.first().and_then(|t| t.best_score)
    }
}

fn check_problem<S: Simulator + ?Sized>(
    space: &ParameterSpace,
    sim: &S,
    config: &SgisConfig,
) -> Result<()> {
    config.validate()?;
    if config.m != space.dims() {
        return Err(Error::DimensionMismatch {
            expected: space.dims(),
            actual: config.m,
        });
    }
    sim.check_dims(space.dims())
}

fn dense_spec(config: &SgisConfig) -> DenseGridSpec {
    DenseGridSpec {
        d: config.d,
        half_width_sigmas: config.half_width_sigmas,
        mode: config.effective_grid_mode(),
    }
}

/// Directly simulated settings, keyed bitwise, so repeats cost nothing.
struct DirectCache<'a, S: ?Sized> {
    log: &'a SessionLog,
    sim: &'a S,
    objective: &'a ObjectiveSpec,
    ledger: &'a CostLedger,
    seen: HashMap<Vec<u64>, ScoredCandidate>,
}

impl<'a, S: Simulator + ?Sized> DirectCache<'a, S> {
    fn new(
        log: &'a SessionLog,
        sim: &'a S,
        objective: &'a ObjectiveSpec,
        ledger: &'a CostLedger,
    ) -> Self {
        Self {
            log,
            sim,
            objective,
            ledger,
            seen: HashMap::new(),
        }
    }

    fn evaluate_all(&mut self, settings: &[Setting]) -> Result<Vec<ScoredCandidate>> {
        let fresh: Vec<Setting> = settings
            .iter()
            .filter(|s| !self.seen.contains_key(&s.key()))
            .cloned()
            .collect();
        if !fresh.is_empty() {
            for (s, kpis) in simulate(self.log, &fresh, self.sim, self.ledger)? {
                let c = ScoredCandidate::new(s, kpis, Source::DirectSimulation, self.objective)?;
                self.seen.insert(c.setting.key(), c);
            }
        }
        Ok(settings
            .iter()
            .map(|s| self.seen[&s.key()].clone())
            .collect())
    }

    fn evaluate(&mut self, setting: &Setting) -> Result<ScoredCandidate> {
        Ok(self.evaluate_all(std::slice::from_ref(setting))?.remove(0))
    }
}

/// Collects artificial sessions at `center` and scores its dense IS grid.
#[allow(clippy::too_many_arguments)]
fn sweep_center<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    sim: &S,
    objective: &ObjectiveSpec,
    config: &SgisConfig,
    center: &Setting,
    seed: u64,
    ledger: &CostLedger,
) -> Result<(Vec<ScoredCandidate>, CenterDiagnostics)> {
    let policy =
        RandomizationPolicy::new(center.clone(), config.sigma.clone(), config.clip_to_bounds)?;
    let data = collect_artificial(log, space, &policy, config.n_artificial, sim, seed, ledger)?;
    let estimates = is_art(
        &data,
        center,
        &dense_spec(config),
        config.cap,
        config.normalize,
        space,
        ledger,
    )?;
    let diagnostics = CenterDiagnostics {
        center: center.clone(),
        grid_points: estimates.len(),
        min_ess: estimates
            .iter()
            .map(|e| e.ess)
            .fold(f64::INFINITY, f64::min),
        max_capped_fraction: estimates
            .iter()
            .map(|e| e.capped_fraction)
            .fold(0.0, f64::max),
    };
    let scored = estimates
        .into_iter()
        .map(|e| ScoredCandidate::new(e.setting, e.kpis, Source::IsEstimate, objective))
        .collect::<Result<Vec<_>>>()?;
    Ok((scored, diagnostics))
}

fn pool_best(pool: &[ScoredCandidate]) -> Option<f64> {
    pool.first().and_then(|c| c.score)
}

/// Coarse grid by direct simulation, then `u` rounds of IS sweeps around the
/// current top-k with direct re-simulation of the IS winners.
///
/// The pool only ever absorbs direct-simulation scores, so its best score never
/// drops below the coarse-grid best.
pub fn sgis<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    sim: &S,
    objective: &ObjectiveSpec,
    config: &SgisConfig,
    ledger: &CostLedger,
) -> Result<SgisResult> {
    check_problem(space, sim, config)?;
    let grid = coarse_grid(space, config.c, config.max_grid)?;
    let mut cache = DirectCache::new(log, sim, objective, ledger);
    let coarse = cache.evaluate_all(&grid)?;

    let mut trace = Vec::new();
    let mut current = match top_k(&coarse, config.k) {
        Ok(p) => p,
        Err(Error::EmptyPool) => {
            trace.push(IterationTrace {
                iteration: 0,
                centers: vec![],
                diagnostics: vec![],
                is_top: vec![],
                direct: vec![],
                best_score: None,
                status: IterationStatus::EmptyPool,
            });
            return Ok(SgisResult {
                best_pool: vec![],
                iterations_run: 0,
                ledger: ledger.snapshot(),
                trace,
            });
        }
        Err(e) => return Err(e),
    };
    let mut best_pool = current.clone();
    trace.push(IterationTrace {
        iteration: 0,
        centers: vec![],
        diagnostics: vec![],
        is_top: vec![],
        direct: current.clone(),
        best_score: pool_best(&best_pool),
        status: IterationStatus::Completed,
    });

    let mut iterations_run = 0;
    for it in 1..=config.u {
        ledger.add_iteration();
        iterations_run = it;
        let prev_best = pool_best(&best_pool);
        let centers: Vec<Setting> = current.iter().map(|c| c.setting.clone()).collect();

        let sweeps = centers
            .par_iter()
            .enumerate()
            .map(|(i, center)| {
                let seed = derive_seed(config.seed, &[it as u64, i as u64]);
                sweep_center(log, space, sim, objective, config, center, seed, ledger)
            })
            .collect::<Result<Vec<_>>>()?;
        let (is_scored, diagnostics): (Vec<_>, Vec<_>) = sweeps.into_iter().unzip();
        let union: Vec<ScoredCandidate> = is_scored.into_iter().flatten().collect();

        let mut record = IterationTrace {
            iteration: it,
            centers,
            diagnostics,
            is_top: vec![],
            direct: vec![],
            best_score: prev_best,
            status: IterationStatus::EmptyPool,
        };
        let is_top = match top_k(&union, config.k) {
            Ok(t) => t,
            Err(Error::EmptyPool) => {
                trace.push(record);
                break;
            }
            Err(e) => return Err(e),
        };
        record.is_top = is_top.clone();

        let proposals: Vec<Setting> = is_top.iter().map(|c| c.setting.clone()).collect();
        let resimulated = cache.evaluate_all(&proposals)?;
        current = match top_k(&resimulated, config.k) {
            Ok(p) => p,
            Err(Error::EmptyPool) => {
                record.direct = resimulated;
                trace.push(record);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut merged = best_pool.clone();
        merged.extend(current.iter().cloned());
        best_pool = top_k(&merged, config.k)?;

        let best = pool_best(&best_pool);
        record.direct = current.clone();
        record.best_score = best;
        let gain = match (best, prev_best) {
            (Some(b), Some(p)) => b - p,
            _ => f64::INFINITY,
        };
        if gain < config.epsilon {
            record.status = IterationStatus::EarlyStop;
            trace.push(record);
            break;
        }
        record.status = IterationStatus::Completed;
        trace.push(record);
    }

    Ok(SgisResult {
        best_pool,
        iterations_run,
        ledger: ledger.snapshot(),
        trace,
    })
}

/// Direct simulation of every point of a `points_per_dim^m` grid.
#[allow(clippy::too_many_arguments)]
pub fn enumerate_baseline<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    sim: &S,
    objective: &ObjectiveSpec,
    points_per_dim: usize,
    k: usize,
    max_grid: usize,
    ledger: &CostLedger,
) -> Result<SgisResult> {
    sim.check_dims(space.dims())?;
    let grid = coarse_grid(space, points_per_dim, max_grid)?;
    let mut cache = DirectCache::new(log, sim, objective, ledger);
    let all = cache.evaluate_all(&grid)?;
    let (best_pool, status) = match top_k(&all, k) {
        Ok(p) => (p, IterationStatus::Completed),
        Err(Error::EmptyPool) => (vec![], IterationStatus::EmptyPool),
        Err(e) => return Err(e),
    };
    Ok(SgisResult {
        trace: vec![IterationTrace {
            iteration: 0,
            centers: vec![],
            diagnostics: vec![],
            is_top: vec![],
            direct: best_pool.clone(),
            best_score: pool_best(&best_pool),
            status,
        }],
        best_pool,
        iterations_run: 0,
        ledger: ledger.snapshot(),
    })
}

/// Hill-climb from `start`: collect randomized sessions at the current center,
/// move to the best feasible IS estimate on its dense grid, verify by direct
/// simulation. Stops after `config.u` moves or when the direct score changes by
/// less than epsilon.
pub fn iterative_is_baseline<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    sim: &S,
    objective: &ObjectiveSpec,
    start: &Setting,
    config: &SgisConfig,
    ledger: &CostLedger,
) -> Result<SgisResult> {
    check_problem(space, sim, config)?;
    if !space.contains(start.values()) {
        return Err(Error::InvalidConfig(format!(
            "start {start} lies outside the space"
        )));
    }
    let mut cache = DirectCache::new(log, sim, objective, ledger);
    let first = cache.evaluate(start)?;
    let mut iterates = vec![first.clone()];
    let mut trace = vec![IterationTrace {
        iteration: 0,
        centers: vec![],
        diagnostics: vec![],
        is_top: vec![],
        direct: vec![first.clone()],
        best_score: first.score,
        status: IterationStatus::Completed,
    }];

    let mut center = start.clone();
    let mut prev_score = first.score;
    let mut iterations_run = 0;
    for it in 1..=config.u {
        ledger.add_iteration();
        iterations_run = it;
        let seed = derive_seed(config.seed, &[it as u64, 0]);
        let (scored, diag) =
            sweep_center(log, space, sim, objective, config, &center, seed, ledger)?;
        let mut record = IterationTrace {
            iteration: it,
            centers: vec![center.clone()],
            diagnostics: vec![diag],
            is_top: vec![],
            direct: vec![],
            best_score: None,
            status: IterationStatus::EmptyPool,
        };
        let best_is = match top_k(&scored, 1) {
            Ok(mut t) => t.remove(0),
            Err(Error::EmptyPool) => {
                trace.push(record);
                break;
            }
            Err(e) => return Err(e),
        };
        center = best_is.setting.clone();
        record.is_top = vec![best_is];
        let iterate = cache.evaluate(&center)?;
        record.direct = vec![iterate.clone()];
        record.best_score = iterate.score;
        iterates.push(iterate.clone());

        let change = match (iterate.score, prev_score) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        prev_score = iterate.score;
        if change < config.epsilon {
            record.status = IterationStatus::EarlyStop;
            trace.push(record);
            break;
        }
        record.status = IterationStatus::Completed;
        trace.push(record);
    }

    let best_pool = match top_k(&iterates, config.k) {
        Ok(p) => p,
        Err(Error::EmptyPool) => vec![],
        Err(e) => return Err(e),
    };
    Ok(SgisResult {
        best_pool,
        iterations_run,
        ledger: ledger.snapshot(),
        trace,
    })
}

/// Direct simulation of the deployed setting, for use as the objective baseline.
pub fn deployment_objective<S: Simulator + ?Sized>(
    log: &SessionLog,
    deployment: &Setting,
    sim: &S,
    maximize: crate::domain::Kpi,
    constraints: Vec<super::objective::Constraint>,
    ledger: &CostLedger,
) -> Result<ObjectiveSpec> {
    let baseline = evaluate_setting(log, deployment, sim, ledger)?;
    ObjectiveSpec::new(maximize, constraints, baseline)
}
