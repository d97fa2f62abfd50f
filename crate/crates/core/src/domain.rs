//! Value types shared by the simulator, the estimators and the search loop.
//!
//! Everything here is immutable after construction except [`CostLedger`],
//! whose counters are atomics so parallel evaluators can bump them.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::estimator::{GridMode, Normalization};

/// Box-bounded continuous parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    bounds: Vec<(f64, f64)>,
    names: Vec<String>,
}

impl ParameterSpace {
    pub fn new(bounds: Vec<(f64, f64)>, names: Vec<String>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidSpace(
                "at least one dimension required".into(),
            ));
        }
        if bounds.len() != names.len() {
            return Err(Error::InvalidSpace(format!(
                "{} bounds but {} names",
                bounds.len(),
                names.len()
            )));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidSpace(format!(
                    "dimension {j} ({}) has invalid bounds [{lo}, {hi}]",
                    names[j]
                )));
            }
        }
        Ok(Self { bounds, names })
    }

    /// Space with generated names `x0, x1, ...`.
    pub fn unnamed(bounds: Vec<(f64, f64)>) -> Result<Self> {
        let names = (0..bounds.len()).map(|j| format!("x{j}")).collect();
        Self::new(bounds, names)
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Projects `values` into the box. The flag reports whether any component moved.
    pub fn make_setting(&self, values: &[f64]) -> Result<(Setting, bool)> {
        if values.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: values.len(),
            });
        }
        let mut clipped = false;
        let mut out = Vec::with_capacity(values.len());
        for (&v, &(lo, hi)) in values.iter().zip(&self.bounds) {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("setting component {v}")));
            }
            let c = v.clamp(lo, hi);
            if c != v {
                clipped = true;
            }
            // + 0.0 folds -0.0 into +0.0 so bitwise identity means value identity
            out.push(c + 0.0);
        }
        Ok((Setting { values: out }, clipped))
    }

    /// Like [`make_setting`](Self::make_setting) but rejects out-of-bounds input.
    pub fn setting(&self, values: &[f64]) -> Result<Setting> {
        let (s, clipped) = self.make_setting(values)?;
        if clipped {
            return Err(Error::InvalidConfig(format!(
                "setting {values:?} lies outside the parameter space"
            )));
        }
        Ok(s)
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.dims()
            && values
                .iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo && v <= hi)
    }
}

/// A point of a [`ParameterSpace`]. Construct through [`ParameterSpace::make_setting`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Setting {
    values: Vec<f64>,
}

impl Setting {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dims(&self) -> usize {
        self.values.len()
    }

    /// Bitwise key, used to deduplicate settings.
    pub fn key(&self) -> Vec<u64> {
        self.values.iter().map(|v| v.to_bits()).collect()
    }

    /// Lexicographic order by component, smaller first.
    pub fn lex_cmp(&self, other: &Setting) -> std::cmp::Ordering {
        for (a, b) in self.values.iter().zip(&other.values) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.values.len().cmp(&other.values.len())
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.4}")?;
        }
        write!(f, "]")
    }
}

/// The four tracked KPIs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kpi {
    Rpm,
    Clicks,
    Iy,
    Revenue,
}

impl Kpi {
    pub const ALL: [Kpi; 4] = [Kpi::Rpm, Kpi::Clicks, Kpi::Iy, Kpi::Revenue];

    pub fn name(self) -> &'static str {
        match self {
            Kpi::Rpm => "rpm",
            Kpi::Clicks => "clicks",
            Kpi::Iy => "iy",
            Kpi::Revenue => "revenue",
        }
    }
}

impl fmt::Display for Kpi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Kpi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rpm" => Ok(Kpi::Rpm),
            "clicks" => Ok(Kpi::Clicks),
            "iy" => Ok(Kpi::Iy),
            "revenue" => Ok(Kpi::Revenue),
            other => Err(Error::InvalidConfig(format!("unknown KPI `{other}`"))),
        }
    }
}

/// Per-setting KPI aggregate. Clicks, IY and revenue are per session, scaled by 1000.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KpiVector {
    pub rpm: f64,
    pub clicks: f64,
    pub iy: f64,
    pub revenue: f64,
    pub n_sessions: u64,
}

impl KpiVector {
    pub fn get(&self, kpi: Kpi) -> f64 {
        match kpi {
            Kpi::Rpm => self.rpm,
            Kpi::Clicks => self.clicks,
            Kpi::Iy => self.iy,
            Kpi::Revenue => self.revenue,
        }
    }

    /// Components in [`Kpi::ALL`] order.
    pub fn components(&self) -> [f64; 4] {
        [self.rpm, self.clicks, self.iy, self.revenue]
    }

    pub fn from_components(c: [f64; 4], n_sessions: u64) -> Self {
        Self {
            rpm: c[0],
            clicks: c[1],
            iy: c[2],
            revenue: c[3],
            n_sessions,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    /// Component-wise mean, summed in iteration order.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a KpiVector>) -> Option<KpiVector> {
        let mut acc = [0.0; 4];
        let mut n = 0u64;
        for k in items {
            for (a, v) in acc.iter_mut().zip(k.components()) {
                *a += v;
            }
            n += 1;
        }
        if n == 0 {
            return None;
        }
        let inv = n as f64;
        Some(KpiVector::from_components(acc.map(|a| a / inv), n))
    }
}

/// Percent differences of a candidate against a baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KpiDelta {
    pub d_rpm: f64,
    pub d_clicks: f64,
    pub d_iy: f64,
    pub d_revenue: f64,
}

impl KpiDelta {
    pub fn get(&self, kpi: Kpi) -> f64 {
        match kpi {
            Kpi::Rpm => self.d_rpm,
            Kpi::Clicks => self.d_clicks,
            Kpi::Iy => self.d_iy,
            Kpi::Revenue => self.d_revenue,
        }
    }
}

/// `100 * (candidate - baseline) / baseline` per KPI.
pub fn kpi_delta(candidate: &KpiVector, baseline: &KpiVector) -> Result<KpiDelta> {
    for kpi in Kpi::ALL {
        if baseline.get(kpi) == 0.0 {
            return Err(Error::ZeroBaseline(kpi));
        }
    }
    let pct = |kpi| 100.0 * (candidate.get(kpi) - baseline.get(kpi)) / baseline.get(kpi);
    Ok(KpiDelta {
        d_rpm: pct(Kpi::Rpm),
        d_clicks: pct(Kpi::Clicks),
        d_iy: pct(Kpi::Iy),
        d_revenue: pct(Kpi::Revenue),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateAd {
    pub bid: f64,
    pub quality: f64,
    pub base_click_logit: f64,
}

impl CandidateAd {
    pub fn validate(&self) -> Result<()> {
        if !(self.bid.is_finite() && self.bid >= 0.0) {
            return Err(Error::InvalidSession(format!(
                "bid {} must be >= 0",
                self.bid
            )));
        }
        if !(0.0..=1.0).contains(&self.quality) {
            return Err(Error::InvalidSession(format!(
                "quality {} outside [0, 1]",
                self.quality
            )));
        }
        if !self.base_click_logit.is_finite() {
            return Err(Error::NonFinite("base_click_logit".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: u64,
    pub user_features: Vec<f64>,
    pub candidates: Vec<CandidateAd>,
}

/// Sessions kept sorted by id; ids are unique.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionLog {
    sessions: Vec<Session>,
}

impl SessionLog {
    pub fn new(mut sessions: Vec<Session>) -> Result<Self> {
        sessions.sort_by_key(|s| s.session_id);
        for w in sessions.windows(2) {
            if w[0].session_id == w[1].session_id {
                return Err(Error::InvalidSession(format!(
                    "duplicate session_id {}",
                    w[0].session_id
                )));
            }
        }
        for s in &sessions {
            if s.candidates.is_empty() {
                return Err(Error::InvalidSession(format!(
                    "session {} has no candidates",
                    s.session_id
                )));
            }
            for c in &s.candidates {
                c.validate()?;
            }
        }
        Ok(Self { sessions })
    }

    pub fn sessions(&self) -> &[Session] {
        &self.sessions
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}

/// Independent per-dimension Gaussian randomization around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizationPolicy {
    pub center: Setting,
    pub sigma: Vec<f64>,
    pub clip_to_bounds: bool,
}

impl RandomizationPolicy {
    pub fn new(center: Setting, sigma: Vec<f64>, clip_to_bounds: bool) -> Result<Self> {
        validate_sigma(&sigma, center.dims())?;
        Ok(Self {
            center,
            sigma,
            clip_to_bounds,
        })
    }

    /// Same spread, different center.
    pub fn recentered(&self, center: Setting) -> Result<Self> {
        Self::new(center, self.sigma.clone(), self.clip_to_bounds)
    }

    pub fn logdensity(&self, x: &[f64]) -> Result<f64> {
        crate::estimator::gaussian_logdensity(x, self.center.values(), &self.sigma)
    }
}

pub(crate) fn validate_sigma(sigma: &[f64], dims: usize) -> Result<()> {
    if sigma.len() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: sigma.len(),
        });
    }
    if let Some(s) = sigma.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidConfig(format!("sigma {s} must be positive")));
    }
    Ok(())
}

/// Upper bound on importance weights. Serialized as a number, or `"inf"` when uncapped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightCap(f64);

impl WeightCap {
    pub const UNCAPPED: WeightCap = WeightCap(f64::INFINITY);

    pub fn new(cap: f64) -> Result<Self> {
        if cap.is_nan() || cap <= 0.0 {
            return Err(Error::InvalidConfig(format!("cap {cap} must be > 0")));
        }
        Ok(Self(cap))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for WeightCap {
    fn default() -> Self {
        WeightCap(10.0)
    }
}

impl Serialize for WeightCap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for WeightCap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let v = match Raw::deserialize(d)? {
            Raw::Num(v) => v,
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "none") => f64::INFINITY,
            Raw::Text(t) => return Err(serde::de::Error::custom(format!("invalid cap `{t}`"))),
        };
        WeightCap::new(v).map_err(serde::de::Error::custom)
    }
}

/// Tuning knobs for the search loop and its baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgisConfig {
    /// Parameter dimensions.
    pub m: usize,
    /// Coarse grid points per dimension.
    pub c: usize,
    /// Dense importance-sampling grid points per dimension.
    pub d: usize,
    /// Pool size.
    pub k: usize,
    /// Refinement iterations.
    pub u: usize,
    /// Early stop when the best direct score improves by less than this.
    pub epsilon: f64,
    pub cap: WeightCap,
    /// Sessions per direct simulation (size of generated logs).
    pub n_sessions: usize,
    /// Artificial sessions collected per randomization center.
    pub n_artificial: usize,
    pub seed: u64,
    /// Randomization standard deviation per dimension.
    pub sigma: Vec<f64>,
    /// Dense grid spans `center ± half_width_sigmas * sigma`.
    pub half_width_sigmas: f64,
    /// `None` picks full-cartesian for `m <= 3` and axis sweeps otherwise.
    pub grid_mode: Option<GridMode>,
    pub normalize: Normalization,
    pub clip_to_bounds: bool,
    /// Refuse grids with more settings than this.
    pub max_grid: usize,
}

impl SgisConfig {
    /// `m=3, c=15, d=25, k=5, u=1` with the given spread.
    pub fn with_sigma(sigma: Vec<f64>, seed: u64) -> Self {
        Self {
            m: sigma.len(),
            c: 15,
            d: 25,
            k: 5,
            u: 1,
            epsilon: 0.0,
            cap: WeightCap::default(),
            n_sessions: 2_000,
            n_artificial: 20_000,
            seed,
            sigma,
            half_width_sigmas: 1.0,
            grid_mode: None,
            normalize: Normalization::SelfNormalized,
            clip_to_bounds: true,
            max_grid: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m == 0 {
            return fail("m must be >= 1".into());
        }
        if self.c < 2 {
            return fail(format!("c = {} must be >= 2", self.c));
        }
        if self.d < 2 {
            return fail(format!("d = {} must be >= 2", self.d));
        }
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return fail(format!("epsilon = {} must be >= 0", self.epsilon));
        }
        if self.n_sessions == 0 {
            return fail("n_sessions must be >= 1".into());
        }
        if self.n_artificial == 0 {
            return fail("n_artificial must be >= 1".into());
        }
        if !(self.half_width_sigmas.is_finite() && self.half_width_sigmas > 0.0) {
            return fail(format!(
                "half_width_sigmas = {} must be > 0",
                self.half_width_sigmas
            ));
        }
        validate_sigma(&self.sigma, self.m)
    }

    pub fn effective_grid_mode(&self) -> GridMode {
        self.grid_mode.unwrap_or(if self.m <= 3 {
            GridMode::FullCartesian
        } else {
            GridMode::AxisSweeps
        })
    }
}

/// Snapshot of a [`CostLedger`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostCounts {
    /// Single-session replays through the simulator.
    pub replay_count: u64,
    /// Single-record importance reweightings.
    pub is_reweigh_count: u64,
    pub settings_simulated: u64,
    pub settings_is_evaluated: u64,
    pub iterations: u64,
}

/// Monotone cost counters, safe to bump from parallel workers.
#[derive(Debug, Default)]
pub struct CostLedger {
    replay_count: AtomicU64,
    is_reweigh_count: AtomicU64,
    settings_simulated: AtomicU64,
    settings_is_evaluated: AtomicU64,
    iterations: AtomicU64,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_replays(&self, n: u64) {
        self.replay_count.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_reweighs(&self, n: u64) {
        self.is_reweigh_count.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_settings_simulated(&self, n: u64) {
        self.settings_simulated.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_settings_is_evaluated(&self, n: u64) {
        self.settings_is_evaluated.fetch_add(n, Ordering::Relaxed);
    }

    pub fn add_iteration(&self) {
        self.iterations.fetch_add(1, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CostCounts {
        CostCounts {
            replay_count: self.replay_count.load(Ordering::Relaxed),
            is_reweigh_count: self.is_reweigh_count.load(Ordering::Relaxed),
            settings_simulated: self.settings_simulated.load(Ordering::Relaxed),
            settings_is_evaluated: self.settings_is_evaluated.load(Ordering::Relaxed),
            iterations: self.iterations.load(Ordering::Relaxed),
        }
    }
}
