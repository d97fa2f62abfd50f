use serde::{Deserialize, Serialize};

use crate::domain::{kpi_delta, Kpi, KpiDelta, KpiVector, ParameterSpace, Setting};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    #[serde(alias = "<=")]
    Le,
    #[serde(alias = ">=")]
    Ge,
}

/// `delta(kpi) <relation> threshold`, threshold in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub kpi: Kpi,
    pub relation: Relation,
    pub threshold: f64,
}

impl Constraint {
    pub fn holds(&self, delta: &KpiDelta) -> bool {
        let v = delta.get(self.kpi);
        match self.relation {
            Relation::Le => v <= self.threshold,
            Relation::Ge => v >= self.threshold,
        }
    }
}

/// Maximize the percent delta of one KPI subject to hard constraints on the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub maximize: Kpi,
    pub constraints: Vec<Constraint>,
    /// KPIs of the deployed setting; denominators of every delta.
    pub baseline: KpiVector,
}

impl ObjectiveSpec {
    pub fn new(maximize: Kpi, constraints: Vec<Constraint>, baseline: KpiVector) -> Result<Self> {
        if let Some(c) = constraints.iter().find(|c| !c.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "constraint threshold on {} is not finite",
                c.kpi
            )));
        }
        kpi_delta(&baseline, &baseline)?;
        Ok(Self {
            maximize,
            constraints,
            baseline,
        })
    }
}

/// Delta against the baseline and the score; `None` marks an infeasible candidate.
pub fn score(kpis: &KpiVector, objective: &ObjectiveSpec) -> Result<(KpiDelta, Option<f64>)> {
    let delta = kpi_delta(kpis, &objective.baseline)?;
    let feasible = objective.constraints.iter().all(|c| c.holds(&delta));
    let s = delta.get(objective.maximize);
    Ok((delta, (feasible && s.is_finite()).then_some(s)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    DirectSimulation,
    IsEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub setting: Setting,
    pub kpis: KpiVector,
    pub delta: KpiDelta,
    /// `None` when a constraint is violated.
    pub score: Option<f64>,
    pub source: Source,
}

impl ScoredCandidate {
    pub fn new(
        setting: Setting,
        kpis: KpiVector,
        source: Source,
        objective: &ObjectiveSpec,
    ) -> Result<Self> {
        let (delta, score) = score(&kpis, objective)?;
        Ok(Self {
            setting,
            kpis,
            delta,
            score,
            source,
        })
    }
}

/// Best `k` feasible candidates, score descending, ties to the lexicographically
/// smaller setting. Identical settings collapse to one entry, preferring a direct
/// simulation over an IS estimate.
pub fn top_k(candidates: &[ScoredCandidate], k: usize) -> Result<Vec<ScoredCandidate>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let mut feasible: Vec<&ScoredCandidate> =
        candidates.iter().filter(|c| c.score.is_some()).collect();
    if feasible.is_empty() {
        return Err(Error::EmptyPool);
    }
    // group duplicates next to each other, best representative first
    feasible.sort_by(|a, b| {
        a.setting
            .lex_cmp(&b.setting)
            .then_with(|| rank_source(a.source).cmp(&rank_source(b.source)))
            .then_with(|| b.score.unwrap().total_cmp(&a.score.unwrap()))
    });
    feasible.dedup_by(|later, first| later.setting.key() == first.setting.key());
    feasible.sort_by(|a, b| {
        b.score
            .unwrap()
            .total_cmp(&a.score.unwrap())
            .then_with(|| a.setting.lex_cmp(&b.setting))
    });
    Ok(feasible.into_iter().take(k).cloned().collect())
}

fn rank_source(s: Source) -> u8 {
    match s {
        Source::DirectSimulation => 0,
        Source::IsEstimate => 1,
    }
}

/// `c` equally spaced values per dimension over the full bounds, lexicographic order.
pub fn coarse_grid(space: &ParameterSpace, c: usize, max_grid: usize) -> Result<Vec<Setting>> {
    if c < 2 {
        return Err(Error::InvalidConfig(format!("c = {c} must be >= 2")));
    }
    let size = (c as u128)
        .checked_pow(space.dims() as u32)
        .unwrap_or(u128::MAX);
    if size > max_grid as u128 {
        return Err(Error::GridTooLarge {
            size,
            cap: max_grid,
        });
    }
    let axes: Vec<Vec<f64>> = space
        .bounds()
        .iter()
        .map(|&(lo, hi)| {
            (0..c)
                .map(|i| {
                    if i == c - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * (i as f64 / (c - 1) as f64)
                    }
                })
                .collect()
        })
        .collect();
    let m = space.dims();
    let mut out = Vec::with_capacity(size as usize);
    let mut idx = vec![0usize; m];
    loop {
        let v: Vec<f64> = idx.iter().enumerate().map(|(j, &i)| axes[j][i]).collect();
        out.push(space.make_setting(&v)?.0);
        let mut j = m;
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < c {
                break;
            }
            idx[j] = 0;
        }
    }
}
