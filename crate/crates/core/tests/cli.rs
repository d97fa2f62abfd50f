use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sgis_core::config::RunConfig;
use sgis_core::io::ResultFile;
use sgis_core::scenarios;

fn sgis_bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgis"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = sgis_bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = sgis_bin(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Self { _dir: dir, root }
    }

    fn path(&self, name: &str) -> String {
        self.root.join(name).to_str().unwrap().to_string()
    }

    fn config(&self, name: &str, cfg: &RunConfig) -> String {
        let p = self.path(name);
        std::fs::write(&p, cfg.to_toml()).unwrap();
        p
    }

    /// Small off-grid problem plus its session log.
    fn small(&self) -> (String, String) {
        let mut cfg = scenarios::off_grid();
        cfg.sgis.n_sessions = 200;
        cfg.sgis.n_artificial = 2_000;
        let c = self.config("small.toml", &cfg);
        let log = self.path("log.jsonl");
        ok(&["gen-sessions", "--config", &c, "--out", &log]);
        (c, log)
    }
}

fn read(p: &str) -> Vec<u8> {
    std::fs::read(p).unwrap()
}

#[test]
fn gen_sessions_counts_lines_and_is_reproducible() {
    let f = Fixture::new();
    let mut cfg = scenarios::auction_default();
    cfg.sgis.n_sessions = 1000;
    let c = f.config("a.toml", &cfg);
    let (a, b) = (f.path("a.jsonl"), f.path("b.jsonl"));
    let out_a = ok(&["gen-sessions", "--config", &c, "--out", &a]);
    let out_b = ok(&[
        "gen-sessions",
        "--config",
        &c,
        "--out",
        &b,
        "--threads",
        "2",
    ]);
    assert_eq!(out_a.replace(&a, ""), out_b.replace(&b, ""));
    assert!(out_a.contains("1000 sessions"));
    assert_eq!(String::from_utf8(read(&a)).unwrap().lines().count(), 1000);
    assert_eq!(read(&a), read(&b));

    let other = f.path("c.jsonl");
    ok(&[
        "gen-sessions",
        "--config",
        &c,
        "--out",
        &other,
        "--seed",
        "99",
    ]);
    assert_ne!(read(&a), read(&other));

    cfg.sgis.n_sessions = 0;
    let bad = f.config("bad.toml", &cfg);
    let err = fail(&[
        "gen-sessions",
        "--config",
        &bad,
        "--out",
        &f.path("x.jsonl"),
    ]);
    assert!(err.contains("n_sessions"), "{err}");
}

#[test]
fn zero_iteration_sgis_matches_enumerate() {
    let f = Fixture::new();
    let (_, log) = f.small();
    let mut cfg = scenarios::off_grid();
    cfg.sgis.u = 0;
    cfg.sgis.n_sessions = 200;
    let c = f.config("u0.toml", &cfg);
    let (s, e) = (f.path("s.json"), f.path("e.json"));
    ok(&["sgis", "--config", &c, "--log", &log, "--out", &s]);
    ok(&[
        "enumerate",
        "--config",
        &c,
        "--log",
        &log,
        "--points-per-dim",
        "5",
        "--out",
        &e,
    ]);
    let (s, e) = (
        ResultFile::read(Path::new(&s)).unwrap(),
        ResultFile::read(Path::new(&e)).unwrap(),
    );
    assert_eq!(s.result.best_pool, e.result.best_pool);
}

#[test]
fn results_round_trip_and_reruns_are_byte_identical() {
    let f = Fixture::new();
    let (c, log) = f.small();
    let (a, b) = (f.path("a.json"), f.path("b.json"));
    let summary = ok(&[
        "sgis",
        "--config",
        &c,
        "--log",
        &log,
        "--out",
        &a,
        "--threads",
        "1",
    ]);
    ok(&[
        "sgis",
        "--config",
        &c,
        "--log",
        &log,
        "--out",
        &b,
        "--threads",
        "3",
    ]);
    assert_eq!(read(&a), read(&b));
    assert!(summary.contains("best setting"));
    assert!(summary.contains("full enumeration at the same resolution"));
    let parsed = ResultFile::read(Path::new(&a)).unwrap();
    assert_eq!(parsed.to_json().into_bytes(), read(&a));
    assert!(Path::new(&format!("{a}.meta.json")).exists());
}

#[test]
fn enumerate_small_grid() {
    let f = Fixture::new();
    let (c, log) = f.small();
    let out = f.path("e.json");
    ok(&[
        "enumerate",
        "--config",
        &c,
        "--log",
        &log,
        "--points-per-dim",
        "2",
        "--out",
        &out,
    ]);
    let r = ResultFile::read(Path::new(&out)).unwrap();
    assert_eq!(r.result.ledger.settings_simulated, 4);
    assert_eq!(r.result.ledger.replay_count, 4 * 200);
    assert_eq!(r.points_per_dim, Some(2));
}

#[test]
fn malformed_log_names_the_line() {
    let f = Fixture::new();
    let (c, log) = f.small();
    let text = std::fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "not json";
    let bad = f.path("bad.jsonl");
    std::fs::write(&bad, lines.join("\n")).unwrap();
    let err = fail(&[
        "sgis",
        "--config",
        &c,
        "--log",
        &bad,
        "--out",
        &f.path("o.json"),
    ]);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn is_baseline_clips_its_start_and_honors_epsilon() {
    let f = Fixture::new();
    let (_, log) = f.small();
    let mut cfg = scenarios::off_grid();
    cfg.sgis.n_sessions = 200;
    cfg.sgis.n_artificial = 2_000;
    cfg.sgis.u = 4;
    cfg.sgis.epsilon = 1e9;
    let c = f.config("eps.toml", &cfg);
    let out = f.path("i.json");
    let summary = ok(&[
        "is-baseline",
        "--config",
        &c,
        "--log",
        &log,
        "--start",
        "-1,2",
        "--out",
        &out,
    ]);
    assert!(summary.contains("warning: start clipped"), "{summary}");
    let r = ResultFile::read(Path::new(&out)).unwrap();
    assert_eq!(r.start.unwrap().values(), &[0.0, 2.0]);
    assert_eq!(r.result.iterations_run, 1);
}

#[test]
fn correlation_writes_csv_and_sidecar() {
    let f = Fixture::new();
    let mut cfg = scenarios::correlation_default();
    cfg.sgis.n_sessions = 200;
    cfg.sgis.n_artificial = 5_000;
    cfg.correlation.n_probe = 3;
    let c = f.config("corr.toml", &cfg);
    let log = f.path("log.jsonl");
    ok(&["gen-sessions", "--config", &c, "--out", &log]);
    let csv = f.path("scatter.csv");
    let out = ok(&[
        "correlation",
        "--config",
        &c,
        "--log",
        &log,
        "--center",
        "2,2,2",
        "--out",
        &csv,
    ]);
    assert!(out.contains("pearson r"));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x0,x1,x2,is_delta_iy,sim_delta_iy");
    assert_eq!(lines.len(), 4);
    let side: serde_json::Value = serde_json::from_slice(&read(&f.path("scatter.json"))).unwrap();
    assert_eq!(side["n_probe"], 3);
    assert!(side.get("r").is_some());
    fail(&[
        "correlation",
        "--config",
        &c,
        "--log",
        &log,
        "--out",
        &f.path("bad.json"),
    ]);
}

#[test]
fn compare_guards_and_self_comparison() {
    let f = Fixture::new();
    let (c, log) = f.small();
    let s = f.path("s.json");
    ok(&["sgis", "--config", &c, "--log", &log, "--out", &s]);
    let e = f.path("e.json");
    ok(&[
        "enumerate",
        "--config",
        &c,
        "--log",
        &log,
        "--points-per-dim",
        "41",
        "--out",
        &e,
    ]);
    let table = f.path("cmp.csv");
    let out = ok(&["compare", "--sgis", &s, "--enumerate", &e, "--out", &table]);
    assert!(
        out.contains("dominance (SGIS >= its coarse grid): pass"),
        "{out}"
    );
    assert!(
        out.contains("cost ordering (enumeration >= 10x SGIS replays): pass"),
        "{out}"
    );

    let same = ok(&["compare", "--sgis", &s, "--enumerate", &s]);
    let rows: Vec<&str> = same.lines().skip(1).take(2).collect();
    assert_eq!(rows[0], rows[1]);
    assert!(rows[0].contains(" 1.000 "));

    let mut other = scenarios::off_grid();
    other.sgis.n_sessions = 200;
    other.sgis.n_artificial = 2_000;
    let oc = f.config("other.toml", &other);
    let other_log = f.path("other.jsonl");
    ok(&[
        "gen-sessions",
        "--config",
        &oc,
        "--out",
        &other_log,
        "--seed",
        "12345",
    ]);
    let o = f.path("o.json");
    ok(&[
        "enumerate",
        "--config",
        &oc,
        "--log",
        &other_log,
        "--points-per-dim",
        "3",
        "--out",
        &o,
    ]);
    let err = fail(&["compare", "--sgis", &s, "--enumerate", &o]);
    assert!(err.contains("digest"), "{err}");
}

#[test]
fn everywhere_infeasible_fails_but_writes_the_trace() {
    let f = Fixture::new();
    let (_, log) = f.small();
    let mut cfg = scenarios::off_grid();
    cfg.sgis.n_sessions = 200;
    cfg.objective.constraints[0].threshold = -1000.0;
    let c = f.config("inf.toml", &cfg);
    let out = f.path("r.json");
    fail(&["sgis", "--config", &c, "--log", &log, "--out", &out]);
    let r = ResultFile::read(Path::new(&out)).unwrap();
    assert!(r.result.best_pool.is_empty());
    assert_eq!(r.result.trace.len(), 1);
}

#[test]
fn paths_fall_back_to_the_config() {
    let f = Fixture::new();
    let mut cfg = scenarios::off_grid();
    cfg.sgis.n_sessions = 50;
    cfg.sgis.n_artificial = 500;
    cfg.paths.log = Some(f.root.join("p.jsonl"));
    cfg.paths.out = Some(f.root.join("p.json"));
    let c = f.config("p.toml", &cfg);
    ok(&["gen-sessions", "--config", &c]);
    ok(&["sgis", "--config", &c]);
    assert!(f.root.join("p.json").exists());
    let err = fail(&["sgis", "--config", &f.path("missing.toml")]);
    assert!(err.contains("missing.toml"), "{err}");
}
