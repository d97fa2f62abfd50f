//! Importance-sampling estimates of KPIs at counterfactual settings.
//!
//! Behavior and target policies are independent Gaussians that share their
//! spread and differ only in center. A record collected at raw action `x` is
//! reweighted by `min(cap, q(x | target) / q(x | behavior))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CostLedger, KpiVector, ParameterSpace, RandomizationPolicy, Setting, WeightCap,
};
use crate::error::{Error, Result};
use crate::simulator::ArtificialDataset;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Sum over dimensions of the univariate normal log-pdf.
pub fn gaussian_logdensity(x: &[f64], mean: &[f64], sigma: &[f64]) -> Result<f64> {
    if x.len() != mean.len() || x.len() != sigma.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            actual: x.len(),
        });
    }
    let mut acc = 0.0;
    for ((&xi, &mi), &si) in x.iter().zip(mean).zip(sigma) {
        if !(si > 0.0 && si.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma {si} must be positive")));
        }
        let z = (xi - mi) / si;
        acc += -0.5 * z * z - si.ln() - HALF_LN_2PI;
    }
    Ok(acc)
}

/// Capped density ratio of `target` over the logged behavior density at `raw_action`.
pub fn importance_weight(
    raw_action: &[f64],
    target: &RandomizationPolicy,
    behavior_logdensity: f64,
    cap: WeightCap,
) -> Result<f64> {
    Ok(raw_weight(raw_action, target, behavior_logdensity)?.min(cap.value()))
}

fn raw_weight(raw_action: &[f64], target: &RandomizationPolicy, behavior: f64) -> Result<f64> {
    if !behavior.is_finite() {
        return Err(Error::NonFinite(format!("behavior log-density {behavior}")));
    }
    let t = target.logdensity(raw_action)?;
    if !t.is_finite() {
        return Err(Error::NonFinite(format!("target log-density {t}")));
    }
    Ok((t - behavior).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `(1/N) sum w_i f_i`; unbiased.
    Plain,
    /// `sum w_i f_i / sum w_i`; bounded by the sample range.
    #[default]
    SelfNormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsEstimate {
    pub setting: Setting,
    pub kpis: KpiVector,
    pub ess: f64,
    pub mean_weight: f64,
    pub max_weight: f64,
    pub capped_fraction: f64,
}

/// Reweights every record of `data` towards `target`.
pub fn is_estimate(
    data: &ArtificialDataset,
    target: &RandomizationPolicy,
    cap: WeightCap,
    normalize: Normalization,
    ledger: &CostLedger,
) -> Result<IsEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = data.len();
    let mut sum_w = 0.0;
    let mut sum_w2 = 0.0;
    let mut max_w: f64 = 0.0;
    let mut n_capped = 0usize;
    let mut acc = [0.0f64; 4];
    for r in &data.records {
        let raw = raw_weight(&r.raw_action, target, r.behavior_logdensity)?;
        let w = if raw > cap.value() {
            n_capped += 1;
            cap.value()
        } else {
            raw
        };
        sum_w += w;
        sum_w2 += w * w;
        max_w = max_w.max(w);
        for (a, v) in acc.iter_mut().zip(r.kpis.components()) {
            *a += w * v;
        }
    }
    let denom = match normalize {
        Normalization::Plain => n as f64,
        Normalization::SelfNormalized => {
            if sum_w == 0.0 {
                return Err(Error::ZeroWeightSum);
            }
            sum_w
        }
    };
    let kpis = KpiVector::from_components(acc.map(|a| a / denom), n as u64);
    if !kpis.is_finite() {
        return Err(Error::NonFinite(format!(
            "IS estimate at {}",
            target.center
        )));
    }
    let ess = if sum_w2 > 0.0 {
        (sum_w * sum_w / sum_w2).min(n as f64)
    } else {
        0.0
    };
    ledger.add_reweighs(n as u64);
    ledger.add_settings_is_evaluated(1);
    Ok(IsEstimate {
        setting: target.center.clone(),
        kpis,
        ess,
        mean_weight: sum_w / n as f64,
        max_weight: max_w,
        capped_fraction: n_capped as f64 / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// All `d^m` combinations.
    FullCartesian,
    /// `d` points along each axis through the center, others held at the center.
    AxisSweeps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DenseGridSpec {
    pub d: usize,
    pub half_width_sigmas: f64,
    pub mode: GridMode,
}

impl DenseGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidConfig(format!("d = {} must be >= 2", self.d)));
        }
        if !(self.half_width_sigmas > 0.0 && self.half_width_sigmas.is_finite()) {
            return Err(Error::InvalidConfig("half_width_sigmas must be > 0".into()));
        }
        Ok(())
    }
}

/// `d` equally spaced offsets in `[-h, h]`; the middle one is exactly 0 for odd `d`.
fn offsets(d: usize, h: f64) -> impl Iterator<Item = f64> {
    let last = (d - 1) as f64;
    (0..d).map(move |i| h * ((2 * i) as f64 / last - 1.0))
}

/// Dense grid around `center`, clipped into `space` and deduplicated.
pub fn dense_grid(
    center: &Setting,
    policy: &RandomizationPolicy,
    spec: &DenseGridSpec,
    space: &ParameterSpace,
) -> Result<Vec<Setting>> {
    spec.validate()?;
    let m = space.dims();
    if center.dims() != m || policy.sigma.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: center.dims(),
        });
    }
    let c = center.values();
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|j| {
            let mut vals: Vec<f64> = offsets(spec.d, spec.half_width_sigmas)
                .map(|o| {
                    let (lo, hi) = space.bounds()[j];
                    (c[j] + o * policy.sigma[j]).clamp(lo, hi) + 0.0
                })
                .collect();
            vals.dedup_by(|a, b| a.to_bits() == b.to_bits());
            vals
        })
        .collect();

    let mut out = Vec::new();
    match spec.mode {
        GridMode::FullCartesian => {
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
                    if idx[j] < axes[j].len() {
                        break;
                    }
                    idx[j] = 0;
                }
            }
        }
        GridMode::AxisSweeps => {
            let mut seen = std::collections::HashSet::new();
            let base = space.make_setting(c)?.0;
            for (j, axis) in axes.iter().enumerate() {
                for &x in axis {
                    let mut v = base.values().to_vec();
                    v[j] = x;
                    let s = space.make_setting(&v)?.0;
                    if seen.insert(s.key()) {
                        out.push(s);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Dense-grid sweep of IS estimates around the dataset's collection center.
///
/// Grid points are estimated in parallel; output order is grid order.
#[allow(clippy::too_many_arguments)]
pub fn is_art(
    data: &ArtificialDataset,
    center: &Setting,
    spec: &DenseGridSpec,
    cap: WeightCap,
    normalize: Normalization,
    space: &ParameterSpace,
    ledger: &CostLedger,
) -> Result<Vec<IsEstimate>> {
    if data.policy.center != *center {
        return Err(Error::InvalidConfig(format!(
            "dataset was collected at {}, not {center}",
            data.policy.center
        )));
    }
    let grid = dense_grid(center, &data.policy, spec, space)?;
    grid.into_par_iter()
        .map(|s| {
            let target = data.policy.recentered(s)?;
            is_estimate(data, &target, cap, normalize, ledger)
        })
        .collect()
}
