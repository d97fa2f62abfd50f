//! Coarse grids, the constrained objective, top-k selection and the search loops.

mod correlation;
mod objective;
mod sgis;

pub use correlation::{
    correlation_at, correlation_report, pearson, CorrelationPair, CorrelationReport,
};
pub use objective::{
    coarse_grid, score, top_k, Constraint, ObjectiveSpec, Relation, ScoredCandidate, Source,
};
pub use sgis::{
    deployment_objective, enumerate_baseline, iterative_is_baseline, sgis, CenterDiagnostics,
    IterationStatus, IterationTrace, SgisResult,
};
