//! TOML run configuration.
//!
//! Every key except `seed` has a default; the defaults describe a three-parameter
//! auction problem searched with `c = 15, d = 25, k = 5, u = 1`. Unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{Kpi, ParameterSpace, Setting, SgisConfig, WeightCap};
use crate::error::{Error, Result};
use crate::estimator::{GridMode, Normalization};
use crate::search::{Constraint, Relation};
use crate::simulator::{Simulator, SimulatorModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub names: Vec<String>,
    pub bounds: Vec<[f64; 2]>,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self {
            names: vec!["w_bid".into(), "w_quality".into(), "ad_load".into()],
            bounds: vec![[0.0, 2.0], [0.0, 2.0], [-3.0, 3.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveConfig {
    pub maximize: Kpi,
    pub constraints: Vec<Constraint>,
    /// Deployed setting whose KPIs are the delta baseline; defaults to the box center.
    pub deployment: Option<Vec<f64>>,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            maximize: Kpi::Rpm,
            constraints: vec![Constraint {
                kpi: Kpi::Iy,
                relation: Relation::Le,
                threshold: 0.0,
            }],
            deployment: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RandomizationConfig {
    /// Defaults to half the coarse grid spacing per dimension.
    pub sigma: Option<Vec<f64>>,
    pub clip_to_bounds: bool,
}

impl Default for RandomizationConfig {
    fn default() -> Self {
        Self {
            sigma: None,
            clip_to_bounds: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    /// Must match the space when given.
    pub m: Option<usize>,
    pub c: usize,
    pub d: usize,
    pub k: usize,
    pub u: usize,
    pub epsilon: f64,
    pub cap: WeightCap,
    pub normalize: Normalization,
    pub grid_mode: Option<GridMode>,
    pub half_width_sigmas: f64,
    pub n_sessions: usize,
    pub n_artificial: usize,
    pub max_grid: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            m: None,
            c: 15,
            d: 25,
            k: 5,
            u: 1,
            epsilon: 0.0,
            cap: WeightCap::default(),
            normalize: Normalization::SelfNormalized,
            grid_mode: None,
            half_width_sigmas: 1.0,
            n_sessions: 2_000,
            n_artificial: 20_000,
            max_grid: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrelationConfig {
    pub n_probe: usize,
    /// Defaults to the deployment setting.
    pub center: Option<Vec<f64>>,
}

impl Default for CorrelationConfig {
    fn default() -> Self {
        Self {
            n_probe: 50,
            center: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub log: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub simulator: SimulatorModel,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub randomization: RandomizationConfig,
    #[serde(default)]
    pub sgis: SearchConfig,
    #[serde(default)]
    pub correlation: CorrelationConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub space: ParameterSpace,
    pub simulator: SimulatorModel,
    pub maximize: Kpi,
    pub constraints: Vec<Constraint>,
    pub deployment: Setting,
    pub search: SgisConfig,
    pub n_probe: usize,
    pub correlation_center: Setting,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Validates every section; `seed_override` wins over the file's seed.
    pub fn resolve(&self, seed_override: Option<u64>) -> Result<Problem> {
        let seed = seed_override.or(self.seed).ok_or_else(|| {
            Error::InvalidConfig("`seed` is required (in the config or via --seed)".into())
        })?;
        let space = ParameterSpace::new(
            self.space.bounds.iter().map(|b| (b[0], b[1])).collect(),
            self.space.names.clone(),
        )?;
        let m = space.dims();
        if let Some(cm) = self.sgis.m {
            if cm != m {
                return Err(Error::InvalidConfig(format!(
                    "sgis.m = {cm} but the space has {m} dimensions"
                )));
            }
        }
        self.simulator.check_dims(m)?;

        let s = &self.sgis;
        let sigma = match &self.randomization.sigma {
            Some(sig) => sig.clone(),
            None => {
                let steps = s.c.max(2) - 1;
                space
                    .bounds()
                    .iter()
                    .map(|(lo, hi)| (hi - lo) / (2 * steps) as f64)
                    .collect()
            }
        };
        let search = SgisConfig {
            m,
            c: s.c,
            d: s.d,
            k: s.k,
            u: s.u,
            epsilon: s.epsilon,
            cap: s.cap,
            n_sessions: s.n_sessions,
            n_artificial: s.n_artificial,
            seed,
            sigma,
            half_width_sigmas: s.half_width_sigmas,
            grid_mode: s.grid_mode,
            normalize: s.normalize,
            clip_to_bounds: self.randomization.clip_to_bounds,
            max_grid: s.max_grid,
        };
        search.validate()?;

        let center: Vec<f64> = space
            .bounds()
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect();
        let deployment = space.setting(self.objective.deployment.as_deref().unwrap_or(&center))?;
        let correlation_center = match &self.correlation.center {
            Some(c) => space.setting(c)?,
            None => deployment.clone(),
        };
        if self.correlation.n_probe < 3 {
            return Err(Error::InvalidConfig(format!(
                "correlation.n_probe = {} must be >= 3",
                self.correlation.n_probe
            )));
        }
        for c in &self.objective.constraints {
            if !c.threshold.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "constraint on {} not finite",
                    c.kpi
                )));
            }
        }
        Ok(Problem {
            space,
            simulator: self.simulator.clone(),
            maximize: self.objective.maximize,
            constraints: self.objective.constraints.clone(),
            deployment,
            search,
            n_probe: self.correlation.n_probe,
            correlation_center,
        })
    }
}
