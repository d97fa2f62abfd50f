//! Open-box replay of logged sessions under counterfactual settings.
//!
//! A [`Simulator`] maps `(session, setting)` to the KPIs of that one replayed
//! session. Aggregation over a log and collection of Gaussian-randomized
//! artificial sessions are shared by every simulator.

pub mod auction;
pub mod surface;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    CandidateAd, CostLedger, KpiVector, ParameterSpace, RandomizationPolicy, Session, SessionLog,
    Setting,
};
use crate::error::{Error, Result};
use crate::estimator::gaussian_logdensity;
use crate::rng::rng_from;

pub use auction::{AuctionSimulator, CounterfactualSession, ShownAd, UserResponseModel};
pub use surface::{Bump, Surface, SurfaceSimulator};

/// Replays a single session. Implementations must be pure.
pub trait Simulator: Send + Sync {
    fn session_kpis(&self, session: &Session, setting: &Setting) -> Result<KpiVector>;

    /// Fails when the simulator cannot consume settings of this dimensionality.
    fn check_dims(&self, dims: usize) -> Result<()> {
        if dims == 0 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        Ok(())
    }
}

/// Serializable choice of simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulatorModel {
    Auction(AuctionSimulator),
    Surface(SurfaceSimulator),
}

impl Default for SimulatorModel {
    fn default() -> Self {
        SimulatorModel::Auction(AuctionSimulator::default())
    }
}

impl Simulator for SimulatorModel {
    fn session_kpis(&self, session: &Session, setting: &Setting) -> Result<KpiVector> {
        match self {
            SimulatorModel::Auction(s) => s.session_kpis(session, setting),
            SimulatorModel::Surface(s) => s.session_kpis(session, setting),
        }
    }

    fn check_dims(&self, dims: usize) -> Result<()> {
        match self {
            SimulatorModel::Auction(s) => {
                s.model.validate()?;
                s.check_dims(dims)
            }
            SimulatorModel::Surface(s) => s.check_dims(dims),
        }
    }
}

/// Number of user features drawn per generated session.
pub const USER_FEATURES: usize = 4;

/// Synthetic session log, reproducible from `(n, seed)`.
///
/// Each session has 5 to 20 candidates with log-normal bids, qualities uniform on
/// `[0.01, 1)` and normal base click logits.
pub fn generate_sessions(n: usize, seed: u64) -> Result<SessionLog> {
    if n == 0 {
        return Err(Error::InvalidConfig("n_sessions must be >= 1".into()));
    }
    let mut rng = rng_from(seed);
    let bid_dist = LogNormal::new(0.0, 1.0).expect("valid lognormal");
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    let logit_dist = Normal::new(-1.0, 1.0).expect("valid normal");
    let sessions = (0..n as u64)
        .map(|session_id| {
            let user_features = (0..USER_FEATURES)
                .map(|_| std_normal.sample(&mut rng))
                .collect();
            let n_cand = rng.gen_range(5..=20);
            let candidates = (0..n_cand)
                .map(|_| CandidateAd {
                    bid: bid_dist.sample(&mut rng),
                    quality: rng.gen_range(0.01..1.0),
                    base_click_logit: logit_dist.sample(&mut rng),
                })
                .collect();
            Session {
                session_id,
                user_features,
                candidates,
            }
        })
        .collect();
    SessionLog::new(sessions)
}

/// Mean per-session KPIs of `setting` over the log.
///
/// Sessions are replayed in parallel and reduced in session-id order, so the
/// result is bitwise independent of the thread count.
pub fn evaluate_setting<S: Simulator + ?Sized>(
    log: &SessionLog,
    setting: &Setting,
    sim: &S,
    ledger: &CostLedger,
) -> Result<KpiVector> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let per_session: Vec<KpiVector> = log
        .sessions()
        .par_iter()
        .map(|s| sim.session_kpis(s, setting))
        .collect::<Result<_>>()?;
    ledger.add_replays(log.len() as u64);
    ledger.add_settings_simulated(1);
    Ok(KpiVector::mean(&per_session).expect("nonempty log"))
}

/// Direct simulation of each setting, output in input order.
pub fn simulate<S: Simulator + ?Sized>(
    log: &SessionLog,
    settings: &[Setting],
    sim: &S,
    ledger: &CostLedger,
) -> Result<Vec<(Setting, KpiVector)>> {
    if settings.is_empty() {
        return Err(Error::InvalidConfig("no settings to simulate".into()));
    }
    settings
        .iter()
        .map(|s| Ok((s.clone(), evaluate_setting(log, s, sim, ledger)?)))
        .collect()
}

/// One randomized replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtificialRecord {
    pub session_id: u64,
    /// Action actually replayed (clipped into the space when the policy clips).
    pub action: Setting,
    /// The Gaussian draw before clipping; densities are evaluated here.
    pub raw_action: Vec<f64>,
    pub behavior_logdensity: f64,
    pub kpis: KpiVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtificialDataset {
    pub policy: RandomizationPolicy,
    pub records: Vec<ArtificialRecord>,
}

impl ArtificialDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Unweighted mean of the per-record KPIs.
    pub fn record_mean(&self) -> Option<KpiVector> {
        KpiVector::mean(self.records.iter().map(|r| &r.kpis))
    }
}

/// Replays `n_artificial` sessions drawn uniformly with replacement, each under an
/// action drawn from `policy`.
///
/// Draws happen sequentially from `seed`; replays run in parallel.
pub fn collect_artificial<S: Simulator + ?Sized>(
    log: &SessionLog,
    space: &ParameterSpace,
    policy: &RandomizationPolicy,
    n_artificial: usize,
    sim: &S,
    seed: u64,
    ledger: &CostLedger,
) -> Result<ArtificialDataset> {
    if n_artificial == 0 {
        return Err(Error::InvalidConfig("n_artificial must be >= 1".into()));
    }
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    if policy.center.dims() != space.dims() {
        return Err(Error::DimensionMismatch {
            expected: space.dims(),
            actual: policy.center.dims(),
        });
    }
    let mut rng = rng_from(seed);
    let normals: Vec<Normal<f64>> = policy
        .center
        .values()
        .iter()
        .zip(&policy.sigma)
        .map(|(&c, &s)| Normal::new(c, s).expect("validated sigma"))
        .collect();

    let mut draws = Vec::with_capacity(n_artificial);
    for _ in 0..n_artificial {
        let idx = rng.gen_range(0..log.len());
        let raw: Vec<f64> = normals.iter().map(|n| n.sample(&mut rng)).collect();
        let (action, clipped) = space.make_setting(&raw)?;
        if clipped && !policy.clip_to_bounds {
            return Err(Error::InvalidConfig(format!(
                "randomized action {raw:?} left the parameter space; enable clip_to_bounds \
                 or move the center away from the bounds"
            )));
        }
        draws.push((idx, raw, action));
    }

    let records = draws
        .into_par_iter()
        .map(|(idx, raw_action, action)| {
            let session = &log.sessions()[idx];
            let kpis = sim.session_kpis(session, &action)?;
            let behavior_logdensity =
                gaussian_logdensity(&raw_action, policy.center.values(), &policy.sigma)?;
            Ok(ArtificialRecord {
                session_id: session.session_id,
                action,
                raw_action,
                behavior_logdensity,
                kpis,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ledger.add_replays(n_artificial as u64);

    Ok(ArtificialDataset {
        policy: policy.clone(),
        records,
    })
}
