//! Constructed problems with known structure, used by the acceptance suite and
//! shipped as TOML under `configs/`.

use crate::config::{
    CorrelationConfig, ObjectiveConfig, PathsConfig, RandomizationConfig, RunConfig, SearchConfig,
    SpaceConfig,
};
use crate::domain::{Kpi, WeightCap};
use crate::estimator::Normalization;
use crate::search::{Constraint, Relation};
use crate::simulator::{Bump, SimulatorModel, Surface, SurfaceSimulator};

/// Revenue optimum of [`off_grid`] and [`off_grid_quadratic`].
pub const OFF_GRID_OPTIMUM: [f64; 2] = [1.72, 2.26];
/// Modes of [`two_bump`]: superior first.
pub const TWO_BUMP_MODES: [[f64; 2]; 2] = [[3.1, 1.1], [0.9, 2.9]];
/// Starting point of the local hill-climb in [`two_bump`], inside the inferior basin.
pub const TWO_BUMP_TRAP_START: [f64; 2] = [1.25, 2.55];

fn square(names: usize, lo: f64, hi: f64) -> SpaceConfig {
    SpaceConfig {
        names: (0..names).map(|j| format!("x{j}")).collect(),
        bounds: vec![[lo, hi]; names],
    }
}

fn iy_cap() -> Vec<Constraint> {
    vec![Constraint {
        kpi: Kpi::Iy,
        relation: Relation::Le,
        threshold: 0.0,
    }]
}

fn off_grid_with(revenue: Surface) -> RunConfig {
    RunConfig {
        seed: Some(11),
        space: square(2, 0.0, 4.0),
        simulator: SimulatorModel::Surface(SurfaceSimulator {
            revenue,
            // IY grows with x0: the constraint cuts off x0 > 2.5
            iy: Surface::Linear {
                intercept: 3000.0,
                slope: vec![300.0, 0.0],
            },
            ctr: 0.05,
            heterogeneity: 0.3,
        }),
        objective: ObjectiveConfig {
            maximize: Kpi::Revenue,
            constraints: iy_cap(),
            deployment: Some(vec![2.5, 1.0]),
        },
        randomization: RandomizationConfig {
            sigma: Some(vec![0.3, 0.3]),
            clip_to_bounds: true,
        },
        sgis: SearchConfig {
            m: Some(2),
            c: 5,
            d: 25,
            k: 3,
            u: 1,
            n_sessions: 2_000,
            n_artificial: 20_000,
            ..SearchConfig::default()
        },
        correlation: CorrelationConfig::default(),
        paths: PathsConfig::default(),
    }
}

/// Two parameters on `[0, 4]^2`, coarse grid spacing 1, revenue peaked at
/// [`OFF_GRID_OPTIMUM`], which is off the grid but within one sigma (0.3) of `(2, 2)`.
pub fn off_grid() -> RunConfig {
    off_grid_with(Surface::Bumps {
        base: 50.0,
        bumps: vec![Bump {
            center: OFF_GRID_OPTIMUM.to_vec(),
            width: 0.35,
            height: 50.0,
        }],
    })
}

/// [`off_grid`] with a quadratic revenue surface.
pub fn off_grid_quadratic() -> RunConfig {
    off_grid_with(Surface::Quadratic {
        peak: 100.0,
        optimum: OFF_GRID_OPTIMUM.to_vec(),
        curvature: vec![8.0, 8.0],
    })
}

/// Two revenue modes with constant IY; small randomization keeps a hill-climb local.
pub fn two_bump() -> RunConfig {
    let [sup, inf] = TWO_BUMP_MODES;
    RunConfig {
        seed: Some(23),
        space: square(2, 0.0, 4.0),
        simulator: SimulatorModel::Surface(SurfaceSimulator {
            revenue: Surface::Bumps {
                base: 50.0,
                bumps: vec![
                    Bump {
                        center: sup.to_vec(),
                        width: 0.4,
                        height: 50.0,
                    },
                    Bump {
                        center: inf.to_vec(),
                        width: 0.4,
                        height: 30.0,
                    },
                ],
            },
            iy: Surface::constant(3000.0, 2),
            ctr: 0.05,
            heterogeneity: 0.3,
        }),
        objective: ObjectiveConfig {
            maximize: Kpi::Revenue,
            // IY is flat here; an IY cap would only test resampling noise
            constraints: vec![],
            deployment: Some(vec![2.0, 2.0]),
        },
        randomization: RandomizationConfig {
            sigma: Some(vec![0.15, 0.15]),
            clip_to_bounds: true,
        },
        sgis: SearchConfig {
            m: Some(2),
            c: 5,
            d: 25,
            k: 3,
            u: 8,
            epsilon: 0.01,
            n_sessions: 2_000,
            n_artificial: 20_000,
            ..SearchConfig::default()
        },
        correlation: CorrelationConfig::default(),
        paths: PathsConfig::default(),
    }
}

/// Three parameters with a curved IY surface; the correlation probe problem.
pub fn correlation_default() -> RunConfig {
    RunConfig {
        seed: Some(5),
        space: square(3, 0.0, 4.0),
        simulator: SimulatorModel::Surface(SurfaceSimulator {
            revenue: Surface::Quadratic {
                peak: 100.0,
                optimum: vec![2.2, 1.8, 2.4],
                curvature: vec![5.0, 5.0, 5.0],
            },
            iy: Surface::Quadratic {
                peak: 4000.0,
                optimum: vec![2.5, 1.5, 2.0],
                curvature: vec![150.0, 100.0, 200.0],
            },
            ctr: 0.05,
            heterogeneity: 0.2,
        }),
        objective: ObjectiveConfig {
            maximize: Kpi::Rpm,
            constraints: iy_cap(),
            deployment: Some(vec![2.0, 2.0, 2.0]),
        },
        randomization: RandomizationConfig {
            sigma: Some(vec![0.3, 0.3, 0.3]),
            clip_to_bounds: true,
        },
        sgis: SearchConfig {
            m: Some(3),
            c: 5,
            d: 9,
            k: 3,
            u: 1,
            n_sessions: 2_000,
            n_artificial: 50_000,
            ..SearchConfig::default()
        },
        correlation: CorrelationConfig {
            n_probe: 50,
            center: Some(vec![2.0, 2.0, 2.0]),
        },
        paths: PathsConfig::default(),
    }
}

/// One parameter, every KPI linear in it: IS is exactly unbiased for point values.
pub fn linear_1d() -> RunConfig {
    RunConfig {
        seed: Some(1),
        space: square(1, 0.0, 10.0),
        simulator: SimulatorModel::Surface(SurfaceSimulator {
            revenue: Surface::Linear {
                intercept: 20.0,
                slope: vec![3.0],
            },
            iy: Surface::constant(2000.0, 1),
            ctr: 0.05,
            heterogeneity: 0.3,
        }),
        objective: ObjectiveConfig {
            maximize: Kpi::Revenue,
            constraints: vec![],
            deployment: Some(vec![5.0]),
        },
        randomization: RandomizationConfig {
            sigma: Some(vec![0.5]),
            clip_to_bounds: true,
        },
        sgis: SearchConfig {
            m: Some(1),
            c: 5,
            d: 25,
            k: 1,
            u: 1,
            cap: WeightCap::UNCAPPED,
            normalize: Normalization::Plain,
            n_sessions: 2_000,
            n_artificial: 50_000,
            ..SearchConfig::default()
        },
        correlation: CorrelationConfig::default(),
        paths: PathsConfig::default(),
    }
}

/// The default auction problem with a seed.
pub fn auction_default() -> RunConfig {
    RunConfig {
        seed: Some(42),
        ..RunConfig::default()
    }
}
