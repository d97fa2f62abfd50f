use sgis_core::config::RunConfig;
use sgis_core::domain::{CostLedger, ParameterSpace, SessionLog};
use sgis_core::scenarios::{self, OFF_GRID_OPTIMUM};
use sgis_core::search::{
    correlation_report, deployment_objective, enumerate_baseline, iterative_is_baseline, sgis,
    IterationStatus, ObjectiveSpec,
};
use sgis_core::simulator::{
    evaluate_setting, generate_sessions, Simulator, SimulatorModel, Surface, SurfaceSimulator,
};
use sgis_core::{Kpi, Problem};

fn setup(cfg: &RunConfig, n_sessions: usize) -> (Problem, SessionLog, ObjectiveSpec) {
    let p = cfg.resolve(None).unwrap();
    let log = generate_sessions(n_sessions, p.search.seed).unwrap();
    let obj = deployment_objective(
        &log,
        &p.deployment,
        &p.simulator,
        p.maximize,
        p.constraints.clone(),
        &CostLedger::new(),
    )
    .unwrap();
    (p, log, obj)
}

#[test]
fn zero_iterations_equal_coarse_enumeration_on_the_auction() {
    let mut cfg = scenarios::auction_default();
    cfg.sgis.c = 4;
    cfg.sgis.u = 0;
    let (p, log, obj) = setup(&cfg, 150);
    let a = sgis(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    let b = enumerate_baseline(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        4,
        p.search.k,
        p.search.max_grid,
        &CostLedger::new(),
    )
    .unwrap();
    assert_eq!(a.best_pool, b.best_pool);
    assert_eq!(b.ledger.replay_count, 64 * 150);
}

#[test]
fn quadratic_off_grid_optimum_is_recovered() {
    let (p, log, obj) = setup(&scenarios::off_grid_quadratic(), 500);
    let run = sgis(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    let oracle = enumerate_baseline(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        201,
        1,
        p.search.max_grid,
        &CostLedger::new(),
    )
    .unwrap();
    let best = run.best_score().unwrap();
    let truth = oracle.best_score().unwrap();
    assert!(best > run.initial_best_score().unwrap());
    assert!((truth - best).abs() / truth <= 0.02, "{best} vs {truth}");
    // fine grid cell is 4/200 per dimension
    let at = oracle.best().unwrap().setting.values().to_vec();
    for (x, o) in at.iter().zip(OFF_GRID_OPTIMUM) {
        assert!((x - o).abs() <= 0.02 + 1e-12, "{at:?}");
    }
}

#[test]
fn three_dimensional_ledger_arithmetic() {
    let sim = SimulatorModel::Surface(SurfaceSimulator {
        revenue: Surface::Quadratic {
            peak: 100.0,
            optimum: vec![7.3, 6.6, 7.9],
            curvature: vec![1.0, 0.5, 2.0],
        },
        iy: Surface::constant(2000.0, 3),
        ctr: 0.05,
        heterogeneity: 0.2,
    });
    let cfg = RunConfig {
        seed: Some(4),
        space: sgis_core::config::SpaceConfig {
            names: vec!["a".into(), "b".into(), "c".into()],
            bounds: vec![[0.0, 14.0]; 3],
        },
        simulator: sim,
        sgis: sgis_core::config::SearchConfig {
            n_artificial: 400,
            ..Default::default()
        },
        ..Default::default()
    };
    let (p, log, obj) = setup(&cfg, 40);
    let s = &p.search;
    assert_eq!((s.m, s.c, s.d, s.k, s.u), (3, 15, 25, 5, 1));
    let run = sgis(&log, &p.space, &p.simulator, &obj, s, &CostLedger::new()).unwrap();
    let l = run.ledger;
    let resim = l.settings_simulated - 3375;
    assert!(resim <= 5);
    assert_eq!(l.replay_count, 3375 * 40 + 5 * 400 + resim * 40);
    assert_eq!(l.settings_is_evaluated, 5 * 25u64.pow(3));
    assert_eq!(l.is_reweigh_count, 5 * 25u64.pow(3) * 400);
    assert_eq!(l.iterations, 1);
}

#[test]
fn pool_scores_are_reproducible_by_direct_simulation() {
    let (p, log, obj) = setup(&scenarios::two_bump(), 300);
    let run = sgis(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert!(run.best_score() >= run.initial_best_score());
    for c in &run.best_pool {
        let kpis = evaluate_setting(&log, &c.setting, &p.simulator, &CostLedger::new()).unwrap();
        assert_eq!(kpis, c.kpis);
        assert_eq!(kpis.get(Kpi::Revenue), c.kpis.revenue);
    }
    let scores: Vec<_> = run.trace.iter().map(|t| t.best_score.unwrap()).collect();
    assert!(scores.windows(2).all(|w| w[1] >= w[0]), "{scores:?}");
}

#[test]
fn hill_climb_from_the_optimum_stays_put() {
    let mut cfg = scenarios::off_grid_quadratic();
    if let SimulatorModel::Surface(s) = &mut cfg.simulator {
        s.heterogeneity = 0.0;
    }
    cfg.sgis.u = 5;
    cfg.sgis.epsilon = 0.5;
    let (p, log, obj) = setup(&cfg, 400);
    let start = p.space.setting(&OFF_GRID_OPTIMUM).unwrap();
    let run = iterative_is_baseline(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &start,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert_eq!(run.iterations_run, 1);
    assert_eq!(run.trace.last().unwrap().status, IterationStatus::EarlyStop);
    let step = 2.0 * 0.3 / 24.0;
    let end = run.trace.last().unwrap().direct[0]
        .setting
        .values()
        .to_vec();
    for (x, o) in end.iter().zip(OFF_GRID_OPTIMUM) {
        assert!((x - o).abs() <= step + 1e-9, "{end:?}");
    }
}

#[test]
fn hill_climb_simulates_at_most_one_setting_per_iteration() {
    let (p, log, obj) = setup(&scenarios::two_bump(), 200);
    let start = p.space.setting(&scenarios::TWO_BUMP_TRAP_START).unwrap();
    let run = iterative_is_baseline(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &start,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert!(run.ledger.settings_simulated <= p.search.u as u64 + 1);
    assert_eq!(run.trace.len(), run.iterations_run + 1);
    assert!(run.trace.iter().all(|t| t.best_score.is_some()));
}

#[test]
fn huge_epsilon_stops_after_one_iteration() {
    let mut cfg = scenarios::two_bump();
    cfg.sgis.epsilon = 1e9;
    let (p, log, obj) = setup(&cfg, 100);
    let start = p.space.setting(&[1.0, 1.0]).unwrap();
    let run = iterative_is_baseline(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &start,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert_eq!(run.iterations_run, 1);
    let run = sgis(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert_eq!(run.iterations_run, 1);
}

#[test]
fn everywhere_infeasible_yields_empty_pool() {
    let mut cfg = scenarios::off_grid();
    cfg.objective.constraints[0].threshold = -1000.0;
    let (p, log, obj) = setup(&cfg, 50);
    let run = sgis(
        &log,
        &p.space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    assert!(run.best_pool.is_empty());
    assert_eq!(run.trace[0].status, IterationStatus::EmptyPool);
}

#[test]
fn degenerate_probes_leave_r_undefined() {
    let (p, log, _) = setup(&scenarios::correlation_default(), 50);
    let mut search = p.search.clone();
    search.n_artificial = 200;
    let r = correlation_report(
        &log,
        &p.space,
        &p.simulator,
        &p.correlation_center,
        &[1e-17; 3],
        5,
        &search,
        1,
        &CostLedger::new(),
    )
    .unwrap();
    assert!(r
        .pairs
        .iter()
        .all(|x| x.excluded && x.is_delta_iy == 0.0 && x.sim_delta_iy == 0.0));
    assert!(r.r.is_none() && r.reason.is_some());
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let (p, log, obj) = setup(&scenarios::off_grid(), 20);
    let space = ParameterSpace::unnamed(vec![(0.0, 1.0)]).unwrap();
    assert!(sgis(
        &log,
        &space,
        &p.simulator,
        &obj,
        &p.search,
        &CostLedger::new()
    )
    .is_err());
    assert!(p.simulator.check_dims(3).is_err());
}
