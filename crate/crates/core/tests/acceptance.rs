//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p sgis-core --test acceptance`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgis_core::cli::{self, Overrides};
use sgis_core::config::{Problem, RunConfig};
use sgis_core::domain::{
    CostLedger, Kpi, KpiVector, RandomizationPolicy, SessionLog, Setting, WeightCap,
};
use sgis_core::estimator::{importance_weight, is_estimate, Normalization};
use sgis_core::scenarios;
use sgis_core::search::{
    deployment_objective, enumerate_baseline, iterative_is_baseline, sgis, ObjectiveSpec,
};
use sgis_core::simulator::{
    collect_artificial, evaluate_setting, generate_sessions, ArtificialDataset, ArtificialRecord,
};

// Tolerances.
const OFF_GRID_REL_TOL: f64 = 0.02;
const ORACLE_POINTS_PER_DIM: usize = 201;
const COST_FRACTION: f64 = 0.10;
const IDENTITY_REL_TOL: f64 = 1e-12;
const UNBIASED_SEEDS: u64 = 200;
const UNBIASED_N: usize = 50_000;
const UNBIASED_SHIFT_SIGMAS: f64 = 0.3;
const UNBIASED_MAX_SE: f64 = 3.0;
const CORRELATION_MIN_R: f64 = 0.9;
const TRAP_REL_TOL: f64 = 0.02;

type Outcome = Result<String, String>;

struct Setup {
    problem: Problem,
    log: SessionLog,
    objective: ObjectiveSpec,
}

fn setup(cfg: &RunConfig) -> Setup {
    let problem = cfg.resolve(None).expect("scenario resolves");
    let log = generate_sessions(problem.search.n_sessions, problem.search.seed).unwrap();
    let objective = deployment_objective(
        &log,
        &problem.deployment,
        &problem.simulator,
        problem.maximize,
        problem.constraints.clone(),
        &CostLedger::new(),
    )
    .unwrap();
    Setup {
        problem,
        log,
        objective,
    }
}

fn rel_gap(found: f64, oracle: f64) -> f64 {
    (oracle - found).abs() / oracle.abs()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn off_grid_and_cost() -> (Outcome, Outcome) {
    let s = setup(&scenarios::off_grid());
    let p = &s.problem;
    let run = sgis(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    let oracle = enumerate_baseline(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        ORACLE_POINTS_PER_DIM,
        1,
        p.search.max_grid,
        &CostLedger::new(),
    )
    .unwrap();

    let best = run.best_score().unwrap();
    let coarse = run.initial_best_score().unwrap();
    let truth = oracle.best_score().unwrap();
    let gap = rel_gap(best, truth);
    let c1 = check(
        gap <= OFF_GRID_REL_TOL && best > coarse,
        format!(
            "sgis {best:.3} at {}, coarse {coarse:.3}, oracle {truth:.3} at {}, gap {:.3}%",
            run.best().unwrap().setting,
            oracle.best().unwrap().setting,
            100.0 * gap
        ),
    );

    let cfg = &p.search;
    let n = s.log.len() as u64;
    let resimulated = run.ledger.settings_simulated - (cfg.c as u64).pow(cfg.m as u32);
    let expected = (cfg.c as u64).pow(cfg.m as u32) * n
        + cfg.k as u64 * cfg.n_artificial as u64
        + resimulated * n;
    let enum_replays = oracle.ledger.replay_count;
    let arithmetic = run.ledger.replay_count == expected
        && resimulated <= cfg.k as u64
        && enum_replays == (ORACLE_POINTS_PER_DIM as u64).pow(2) * n;
    let fraction = run.ledger.replay_count as f64 / enum_replays as f64;
    let c2 = check(
        arithmetic && fraction < COST_FRACTION,
        format!(
            "sgis {} replays = {}^2*{n} + {}*{} + {resimulated}*{n}; enumeration {enum_replays}; ratio {:.4}",
            run.ledger.replay_count, cfg.c, cfg.k, cfg.n_artificial, fraction
        ),
    );
    (c1, c2)
}

fn pt(x: f64) -> Setting {
    sgis_core::domain::ParameterSpace::unnamed(vec![(-1e6, 1e6)])
        .unwrap()
        .setting(&[x])
        .unwrap()
}

fn synthetic_dataset(rng: &mut ChaCha8Rng, n: usize) -> (ArtificialDataset, Vec<f64>) {
    let sigma = rng.gen_range(0.2..2.0);
    let center = rng.gen_range(-2.0..2.0);
    let policy = RandomizationPolicy::new(pt(center), vec![sigma], true).unwrap();
    let mut values = Vec::with_capacity(n);
    let records = (0..n)
        .map(|i| {
            let raw = center + sigma * rng.gen_range(-3.0..3.0);
            let v = rng.gen_range(-50.0..500.0);
            values.push(v);
            ArtificialRecord {
                session_id: i as u64,
                action: pt(raw),
                raw_action: vec![raw],
                behavior_logdensity: policy.logdensity(&[raw]).unwrap(),
                kpis: KpiVector::from_components([v, v * 0.5, v + 7.0, -v], 1),
            }
        })
        .collect();
    (ArtificialDataset { policy, records }, values)
}

fn estimator_laws() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ledger = CostLedger::new();
    let mut cases = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..200);
        let (data, values) = synthetic_dataset(&mut rng, n);
        let policy = data.policy.clone();
        for r in &data.records {
            let w = importance_weight(
                &r.raw_action,
                &policy,
                r.behavior_logdensity,
                WeightCap::default(),
            )
            .unwrap();
            if w != 1.0 {
                return Err(format!("self weight {w} != 1"));
            }
        }
        let same = is_estimate(
            &data,
            &policy,
            WeightCap::default(),
            Normalization::Plain,
            &ledger,
        )
        .unwrap();
        let mean = values.iter().sum::<f64>() / n as f64;
        if (same.kpis.rpm - mean).abs() > IDENTITY_REL_TOL * mean.abs().max(1.0) {
            return Err(format!(
                "identity estimate {} vs mean {mean}",
                same.kpis.rpm
            ));
        }

        let shift = rng.gen_range(-1.5..1.5) * policy.sigma[0];
        let target = policy
            .recentered(pt(policy.center.values()[0] + shift))
            .unwrap();
        let uncapped = is_estimate(
            &data,
            &target,
            WeightCap::UNCAPPED,
            Normalization::Plain,
            &ledger,
        )
        .unwrap();
        let huge = is_estimate(
            &data,
            &target,
            WeightCap::new(f64::MAX).unwrap(),
            Normalization::Plain,
            &ledger,
        )
        .unwrap();
        if uncapped.kpis != huge.kpis {
            return Err("cap = inf differs from an effectively unbounded cap".into());
        }
        // closed-form density ratio for equal spreads
        let (mb, mt, sg) = (
            policy.center.values()[0],
            target.center.values()[0],
            policy.sigma[0],
        );
        let oracle = data
            .records
            .iter()
            .zip(&values)
            .map(|(r, v)| {
                let x = r.raw_action[0];
                v * ((x - mb).powi(2) / (2.0 * sg * sg) - (x - mt).powi(2) / (2.0 * sg * sg)).exp()
            })
            .sum::<f64>()
            / n as f64;
        if (uncapped.kpis.rpm - oracle).abs() > 1e-9 * oracle.abs().max(1.0) {
            return Err(format!(
                "uncapped estimate {} vs closed form {oracle}",
                uncapped.kpis.rpm
            ));
        }
        let snis = is_estimate(
            &data,
            &target,
            WeightCap::default(),
            Normalization::SelfNormalized,
            &ledger,
        );
        if let Ok(e) = snis {
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-9 * hi.abs().max(lo.abs());
            if e.kpis.rpm < lo - slack || e.kpis.rpm > hi + slack {
                return Err(format!("SNIS {} outside [{lo}, {hi}]", e.kpis.rpm));
            }
            if !(e.ess >= 1.0 - 1e-9 && e.ess <= n as f64) {
                return Err(format!("ESS {} outside [1, {n}]", e.ess));
            }
        }
        cases += 1;
    }
    let elapsed = started.elapsed().as_secs_f64();
    check(
        elapsed < 1.0,
        format!("{cases} random datasets in {elapsed:.3}s"),
    )
}

fn unbiasedness() -> Outcome {
    let s = setup(&scenarios::linear_1d());
    let p = &s.problem;
    let a0 = p.deployment.values()[0];
    let sigma = p.search.sigma[0];
    let behavior = RandomizationPolicy::new(p.deployment.clone(), vec![sigma], false).unwrap();
    let target_setting = p
        .space
        .setting(&[a0 + UNBIASED_SHIFT_SIGMAS * sigma])
        .unwrap();
    let target = behavior.recentered(target_setting.clone()).unwrap();
    let truth =
        evaluate_setting(&s.log, &target_setting, &p.simulator, &CostLedger::new()).unwrap();

    let mut estimates = Vec::with_capacity(UNBIASED_SEEDS as usize);
    for seed in 0..UNBIASED_SEEDS {
        let ledger = CostLedger::new();
        let data = collect_artificial(
            &s.log,
            &p.space,
            &behavior,
            UNBIASED_N,
            &p.simulator,
            seed,
            &ledger,
        )
        .unwrap();
        let e = is_estimate(
            &data,
            &target,
            WeightCap::UNCAPPED,
            Normalization::Plain,
            &ledger,
        )
        .unwrap();
        estimates.push(e.kpis.components());
    }
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (j, kpi) in Kpi::ALL.iter().enumerate() {
        let xs: Vec<f64> = estimates.iter().map(|c| c[j]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let t = truth.get(*kpi);
        let z = if se > 0.0 {
            (mean - t).abs() / se
        } else if (mean - t).abs() <= 1e-9 * t.abs() {
            0.0
        } else {
            f64::INFINITY
        };
        worst = worst.max(z);
        detail.push(format!("{kpi} {z:.2}se"));
    }
    check(worst <= UNBIASED_MAX_SE, detail.join(", "))
}

fn correlation() -> Outcome {
    let s = setup(&scenarios::correlation_default());
    let p = &s.problem;
    assert_eq!(p.n_probe, 50);
    assert_eq!(p.search.n_artificial, 50_000);
    let report = sgis_core::search::correlation_report(
        &s.log,
        &p.space,
        &p.simulator,
        &p.correlation_center,
        &p.search.sigma,
        p.n_probe,
        &p.search,
        p.search.seed,
        &CostLedger::new(),
    )
    .unwrap();
    match report.r {
        Some(r) => check(
            r >= CORRELATION_MIN_R,
            format!("r = {r:.4} over {} probes", report.pairs.len()),
        ),
        None => Err(format!("r undefined: {:?}", report.reason)),
    }
}

fn baseline_equivalence() -> Outcome {
    let s = setup(&scenarios::off_grid());
    let p = &s.problem;
    let mut cfg = p.search.clone();
    cfg.u = 0;
    let run = sgis(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        &cfg,
        &CostLedger::new(),
    )
    .unwrap();
    let en = enumerate_baseline(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        cfg.c,
        cfg.k,
        cfg.max_grid,
        &CostLedger::new(),
    )
    .unwrap();
    check(
        run.best_pool == en.best_pool && run.ledger == en.ledger,
        format!(
            "{} pooled settings identical, ledgers equal",
            run.best_pool.len()
        ),
    )
}

fn local_trap() -> Outcome {
    let s = setup(&scenarios::two_bump());
    let p = &s.problem;
    let oracle = enumerate_baseline(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        ORACLE_POINTS_PER_DIM,
        1,
        p.search.max_grid,
        &CostLedger::new(),
    )
    .unwrap();
    let superior = oracle.best_score().unwrap();
    // inferior mode: brute force restricted to its basin
    let [_, inf_mode] = scenarios::TWO_BUMP_MODES;
    let basin = sgis_core::domain::ParameterSpace::unnamed(
        inf_mode.iter().map(|&c| (c - 0.5, c + 0.5)).collect(),
    )
    .unwrap();
    let inferior = enumerate_baseline(
        &s.log,
        &basin,
        &p.simulator,
        &s.objective,
        ORACLE_POINTS_PER_DIM,
        1,
        p.search.max_grid,
        &CostLedger::new(),
    )
    .unwrap()
    .best_score()
    .unwrap();

    let start = p.space.setting(&scenarios::TWO_BUMP_TRAP_START).unwrap();
    let local = iterative_is_baseline(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        &start,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    let global = sgis(
        &s.log,
        &p.space,
        &p.simulator,
        &s.objective,
        &p.search,
        &CostLedger::new(),
    )
    .unwrap();
    let local_score = local.trace.last().unwrap().best_score.unwrap();
    let global_score = global.best_score().unwrap();
    check(
        rel_gap(local_score, inferior) <= TRAP_REL_TOL
            && rel_gap(global_score, superior) <= TRAP_REL_TOL
            && local_score < superior * (1.0 - TRAP_REL_TOL),
        format!(
            "is-baseline ends at {local_score:.3} (inferior mode {inferior:.3}), sgis {global_score:.3} (superior mode {superior:.3})"
        ),
    )
}

fn out_of_scope() -> Outcome {
    let readme = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md");
    let text = std::fs::read_to_string(&readme).map_err(|e| format!("README missing: {e}"))?;
    check(
        text.contains("not reproduced"),
        "live A/B deltas documented as not reproduced; no test expects them".into(),
    )
}

fn small(cfg: RunConfig) -> RunConfig {
    let mut cfg = cfg;
    cfg.sgis.n_sessions = 300;
    cfg.sgis.n_artificial = 3_000;
    cfg
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut cfg = small(scenarios::off_grid());
    cfg.sgis.u = 2;
    let config = d.join("run.toml");
    std::fs::write(&config, cfg.to_toml()).unwrap();
    let mut corr = small(scenarios::correlation_default());
    corr.correlation.n_probe = 10;
    let corr_config = d.join("corr.toml");
    std::fs::write(&corr_config, corr.to_toml()).unwrap();

    let run = |threads: usize| -> Vec<(String, Vec<u8>)> {
        let ov = Overrides {
            seed: None,
            threads: Some(threads),
        };
        let sub = d.join(format!("t{threads}"));
        std::fs::create_dir_all(&sub).unwrap();
        let f = |name: &str| sub.join(name);
        let log = f("log.jsonl");
        cli::cmd_gen_sessions(&config, &log, ov).unwrap();
        cli::cmd_sgis(&config, &log, &f("sgis.json"), ov).unwrap();
        cli::cmd_enumerate(&config, &log, 9, &f("enum.json"), ov).unwrap();
        cli::cmd_is_baseline(&config, &log, &[1.0, 3.0], &f("isb.json"), ov).unwrap();
        cli::cmd_compare(
            &f("sgis.json"),
            Some(&f("enum.json")),
            Some(&f("isb.json")),
            Some(&f("cmp.csv")),
        )
        .unwrap();
        let corr_log = f("corr.jsonl");
        cli::cmd_gen_sessions(&corr_config, &corr_log, ov).unwrap();
        cli::cmd_correlation(&corr_config, &corr_log, None, &f("corr.csv"), ov).unwrap();
        [
            "log.jsonl",
            "sgis.json",
            "enum.json",
            "isb.json",
            "corr.jsonl",
            "corr.csv",
            "corr.json",
        ]
        .iter()
        .map(|n| (n.to_string(), std::fs::read(f(n)).unwrap()))
        .collect()
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    let differing: Vec<&str> = a
        .iter()
        .zip(&b)
        .zip(&c)
        .filter(|((x, y), z)| x.1 != y.1 || y.1 != z.1)
        .map(|((x, _), _)| x.0.as_str())
        .collect();
    // compare rows carry wall time, so only the deterministic columns are checked
    let strip = |t: usize| -> String {
        let path: PathBuf = d.join(format!("t{t}")).join("cmp.csv");
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols[5] = "";
                cols.join(",")
            })
            .collect::<Vec<_>>()
            .join("\n")
    };
    let compare_same = strip(1) == strip(4);
    check(
        differing.is_empty() && compare_same,
        if differing.is_empty() && compare_same {
            format!(
                "{} outputs byte-identical across threads 1/4/4",
                a.len() + 1
            )
        } else {
            format!("differing outputs: {differing:?}, compare identical: {compare_same}")
        },
    )
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let started = Instant::now();
    let (c1, c2) = off_grid_and_cost();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "off-grid optimum recovery", c1),
        (2, "cost advantage over enumeration", c2),
        (3, "estimator identity and cap laws", estimator_laws()),
        (4, "plain IS unbiasedness", unbiasedness()),
        (5, "IS vs direct IY correlation", correlation()),
        (6, "u = 0 equals coarse enumeration", baseline_equivalence()),
        (7, "local trap contrast", local_trap()),
        (8, "live A/B deltas out of scope", out_of_scope()),
        (9, "determinism across threads", determinism()),
    ];
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {id} PASS  {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {id} FAIL  {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
