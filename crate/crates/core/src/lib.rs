//! Simulator-guided importance sampling (SGIS) for tuning ranking and auction
//! parameters against logged traffic.
//!
//! The pipeline: a coarse grid is scored by direct replay through an open-box
//! [`simulator`], the best few settings become centers of Gaussian
//! randomization, and [`estimator`] reweighs the randomized replays to score a
//! dense grid around each center. Finalists are re-simulated before they can
//! win.

pub mod cli;
pub mod config;
pub mod domain;
pub mod error;
pub mod estimator;
pub mod io;
pub mod rng;
pub mod scenarios;
pub mod search;
pub mod simulator;

pub use config::{Problem, RunConfig};
pub use domain::{
    CandidateAd, CostCounts, CostLedger, Kpi, KpiDelta, KpiVector, ParameterSpace,
    RandomizationPolicy, Session, SessionLog, Setting, SgisConfig, WeightCap,
};
pub use error::{Error, Result};
pub use search::{sgis, SgisResult};
pub use simulator::{Simulator, SimulatorModel};
