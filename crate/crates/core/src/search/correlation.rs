//! Agreement between IS and direct-simulation IY deltas around one center.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CostLedger, Kpi, ParameterSpace, RandomizationPolicy, SessionLog, Setting, SgisConfig,
};
use crate::error::{Error, Result};
use crate::estimator::is_estimate;
use crate::rng::{derive_seed, rng_from};
use crate::simulator::{collect_artificial, evaluate_setting, ArtificialDataset, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPair {
    pub setting: Setting,
    pub is_delta_iy: f64,
    pub sim_delta_iy: f64,
    /// The probe coincides with the center and is left out of `r`.
    pub excluded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub pairs: Vec<CorrelationPair>,
    pub r: Option<f64>,
    /// Why `r` is undefined, when it is.
    pub reason: Option<String>,
}

/// Pearson correlation; `None` when fewer than two points or either series is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx.sqrt() * syy.sqrt()))
}

fn pct(x: f64, base: f64) -> Result<f64> {
    if base == 0.0 {
        return Err(Error::ZeroBaseline(Kpi::Iy));
    }
    Ok(100.0 * (x - base) / base)
}

/// IY deltas of `probes` relative to the dataset's center, by IS on `data` and by
/// direct simulation on `log`.
#[allow(clippy::too_many_arguments)]
pub fn correlation_at<S: Simulator + ?Sized>(
    log: &SessionLog,
    sim: &S,
    data: &ArtificialDataset,
    probes: &[Setting],
    config: &SgisConfig,
    ledger: &CostLedger,
) -> Result<CorrelationReport> {
    let center = &data.policy.center;
    let is_base = is_estimate(data, &data.policy, config.cap, config.normalize, ledger)?
        .kpis
        .iy;
    let sim_base = evaluate_setting(log, center, sim, ledger)?.iy;
    let mut pairs = Vec::with_capacity(probes.len());
    for p in probes {
        let excluded = p.key() == center.key();
        let (is_iy, sim_iy) = if excluded {
            (is_base, sim_base)
        } else {
            let target = data.policy.recentered(p.clone())?;
            let est = is_estimate(data, &target, config.cap, config.normalize, ledger)?;
            (est.kpis.iy, evaluate_setting(log, p, sim, ledger)?.iy)
        };
        pairs.push(CorrelationPair {
            setting: p.clone(),
            is_delta_iy: pct(is_iy, is_base)?,
            sim_delta_iy: pct(sim_iy, sim_base)?,
            excluded,
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs
        .iter()
        .filter(|p| !p.excluded)
        .map(|p| (p.is_delta_iy, p.sim_delta_iy))
        .unzip();
    let r = pearson(&xs, &ys);
    let reason = match r {
        Some(_) => None,
        None if xs.len() < 2 => Some(format!("only {} probe(s) differ from the center", xs.len())),
        None => Some("zero variance in a delta series".to_string()),
    };
    Ok(CorrelationReport { pairs, r, reason })
}

/// Samples `n_probe` settings uniformly in the ±1σ box around `center` and compares
/// IS and direct IY deltas on one artificial dataset collected at `center`.
#[allow(clippy::too_many_arguments)]
pub fn correlation_report<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    sim: &S,
    center: &Setting,
    sigma: &[f64],
    n_probe: usize,
    config: &SgisConfig,
    seed: u64,
    ledger: &CostLedger,
) -> Result<CorrelationReport> {
    if n_probe < 3 {
        return Err(Error::InvalidConfig(format!(
            "n_probe = {n_probe} must be >= 3"
        )));
    }
    sim.check_dims(space.dims())?;
    let policy = RandomizationPolicy::new(center.clone(), sigma.to_vec(), config.clip_to_bounds)?;
    let mut rng = rng_from(derive_seed(seed, &[0]));
    let probes = (0..n_probe)
        .map(|_| {
            let v: Vec<f64> = center
                .values()
                .iter()
                .zip(sigma)
                .map(|(&c, &s)| c + s * rng.gen_range(-1.0..=1.0))
                .collect();
            Ok(space.make_setting(&v)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    let data = collect_artificial(
        log,
        space,
        &policy,
        config.n_artificial,
        sim,
        derive_seed(seed, &[1]),
        ledger,
    )?;
    correlation_at(log, sim, &data, &probes, config, ledger)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_basics() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(pearson(&[1.0], &[1.0]), None);
    }
}
