//! C ABI over `sgis-core`.
//!
//! Conventions:
//! - every fallible function returns an [`SgisStatus`]; on failure
//!   [`sgis_last_error`] describes it (per thread, valid until the next call),
//! - handles are opaque and released with their `_free` function,
//! - strings returned as `char *` are owned by the caller and released with
//!   [`sgis_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sgis_core::config::{Problem, RunConfig};
use sgis_core::domain::{CostLedger, SessionLog, Setting};
use sgis_core::error::Error;
use sgis_core::estimator::gaussian_logdensity;
use sgis_core::io::{
    encode_session_log, read_session_log, sha256_hex, write_session_log, Method, ResultFile,
    RESULT_SCHEMA, RESULT_VERSION,
};
use sgis_core::search::{
    deployment_objective, enumerate_baseline, iterative_is_baseline, sgis, SgisResult,
};
use sgis_core::simulator::generate_sessions;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidConfig = 3,
    InvalidInput = 4,
    Parse = 5,
    Io = 6,
    EmptyPool = 7,
    Incompatible = 8,
    Numeric = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// A validated run configuration.
pub struct SgisProblem {
    problem: Problem,
}

/// A session log and the digest of its serialized form.
pub struct SgisLog {
    log: SessionLog,
    digest: String,
}

/// Output of a search or baseline run.
pub struct SgisRun {
    file: ResultFile,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> SgisStatus {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidSpace(_)
        | Error::GridTooLarge { .. }
        | Error::Toml(_) => SgisStatus::InvalidConfig,
        Error::DimensionMismatch { .. }
        | Error::InvalidSession(_)
        | Error::EmptyLog
        | Error::EmptyDataset => SgisStatus::InvalidInput,
        Error::Parse { .. } | Error::Json(_) => SgisStatus::Parse,
        Error::Io { .. } => SgisStatus::Io,
        Error::EmptyPool => SgisStatus::EmptyPool,
        Error::Incompatible(_) => SgisStatus::Incompatible,
        Error::ZeroBaseline(_) | Error::NonFinite(_) | Error::ZeroWeightSum => SgisStatus::Numeric,
    }
}

struct Fail(SgisStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SgisStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SgisStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgisStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(SgisStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SgisStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(SgisStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(SgisStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_arg<T>(out: *mut *mut T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(
            SgisStatus::NullPointer,
            "output pointer is null".into(),
        ));
    }
    Ok(())
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread; empty after a success.
#[no_mangle]
pub extern "C" fn sgis_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn sgis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn sgis_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates a TOML run configuration. `seed_override` may be null.
///
/// # Safety
/// `toml` must be a NUL-terminated string, `seed_override` null or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_problem_from_toml(
    toml: *const c_char,
    seed_override: *const u64,
    out: *mut *mut SgisProblem,
) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let text = str_arg(toml, "toml")?;
        let problem = RunConfig::from_toml(text)?.resolve(seed_override.as_ref().copied())?;
        *out = Box::into_raw(Box::new(SgisProblem { problem }));
        Ok(())
    })
}

/// Number of parameter dimensions, 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_problem_dims(problem: *const SgisProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.problem.space.dims())
}

/// # Safety
/// `problem` must be null or a handle from [`sgis_problem_from_toml`], freed once.
#[no_mangle]
pub unsafe extern "C" fn sgis_problem_free(problem: *mut SgisProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Generates the configured number of synthetic sessions from the problem's seed.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_generate(
    problem: *const SgisProblem,
    out: *mut *mut SgisLog,
) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let p = &ref_arg(problem, "problem")?.problem;
        let log = generate_sessions(p.search.n_sessions, p.search.seed)?;
        let digest = sha256_hex(encode_session_log(&log).as_bytes());
        *out = Box::into_raw(Box::new(SgisLog { log, digest }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_load(path: *const c_char, out: *mut *mut SgisLog) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let (log, digest) = read_session_log(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(SgisLog { log, digest }));
        Ok(())
    })
}

/// # Safety
/// `log` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_save(log: *const SgisLog, path: *const c_char) -> SgisStatus {
    guard(|| {
        let log = ref_arg(log, "log")?;
        write_session_log(&log.log, Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Number of sessions, 0 for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_len(log: *const SgisLog) -> usize {
    log.as_ref().map_or(0, |l| l.log.len())
}

/// Hex SHA-256 of the serialized log; free with [`sgis_string_free`]. Null for a null handle.
///
/// # Safety
/// `log` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_digest(log: *const SgisLog) -> *mut c_char {
    log.as_ref()
        .map_or(ptr::null_mut(), |l| into_c_string(l.digest.clone()))
}

/// # Safety
/// `log` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sgis_log_free(log: *mut SgisLog) {
    if !log.is_null() {
        drop(Box::from_raw(log));
    }
}

fn run_with(
    problem: &Problem,
    log: &SgisLog,
    method: Method,
    points_per_dim: Option<usize>,
    start: Option<Setting>,
    search: impl FnOnce(&sgis_core::search::ObjectiveSpec) -> sgis_core::Result<SgisResult>,
) -> Result<SgisRun, Fail> {
    let objective = deployment_objective(
        &log.log,
        &problem.deployment,
        &problem.simulator,
        problem.maximize,
        problem.constraints.clone(),
        &CostLedger::new(),
    )?;
    let result = search(&objective)?;
    Ok(SgisRun {
        file: ResultFile {
            schema: RESULT_SCHEMA.to_string(),
            version: RESULT_VERSION,
            method,
            log_digest: log.digest.clone(),
            n_sessions: log.log.len(),
            space: problem.space.clone(),
            objective,
            config: problem.search.clone(),
            deployment: problem.deployment.clone(),
            points_per_dim,
            start,
            result,
        },
    })
}

/// Runs the SGIS search. An everywhere-infeasible problem still yields a run with
/// an empty pool.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_sgis(
    problem: *const SgisProblem,
    log: *const SgisLog,
    out: *mut *mut SgisRun,
) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let p = &ref_arg(problem, "problem")?.problem;
        let l = ref_arg(log, "log")?;
        let run = run_with(p, l, Method::Sgis, None, None, |obj| {
            sgis(
                &l.log,
                &p.space,
                &p.simulator,
                obj,
                &p.search,
                &CostLedger::new(),
            )
        })?;
        *out = Box::into_raw(Box::new(run));
        Ok(())
    })
}

/// Direct simulation of a `points_per_dim^m` grid.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_enumerate(
    problem: *const SgisProblem,
    log: *const SgisLog,
    points_per_dim: usize,
    out: *mut *mut SgisRun,
) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let p = &ref_arg(problem, "problem")?.problem;
        let l = ref_arg(log, "log")?;
        let run = run_with(p, l, Method::Enumerate, Some(points_per_dim), None, |obj| {
            enumerate_baseline(
                &l.log,
                &p.space,
                &p.simulator,
                obj,
                points_per_dim,
                p.search.k,
                p.search.max_grid,
                &CostLedger::new(),
            )
        })?;
        *out = Box::into_raw(Box::new(run));
        Ok(())
    })
}

/// Importance-sampling hill-climb from `start` (`len` values, clipped into the space).
///
/// # Safety
/// Handles must be live, `start` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_is_baseline(
    problem: *const SgisProblem,
    log: *const SgisLog,
    start: *const f64,
    len: usize,
    out: *mut *mut SgisRun,
) -> SgisStatus {
    guard(|| {
        out_arg(out)?;
        let p = &ref_arg(problem, "problem")?.problem;
        let l = ref_arg(log, "log")?;
        let (start, _) = p.space.make_setting(slice_arg(start, len, "start")?)?;
        let run = run_with(p, l, Method::IsBaseline, None, Some(start.clone()), |obj| {
            iterative_is_baseline(
                &l.log,
                &p.space,
                &p.simulator,
                obj,
                &start,
                &p.search,
                &CostLedger::new(),
            )
        })?;
        *out = Box::into_raw(Box::new(run));
        Ok(())
    })
}

/// Best direct score; `SGIS_STATUS_EMPTY_POOL` when nothing was feasible.
///
/// # Safety
/// `run` must be a live handle and `score` writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_best_score(run: *const SgisRun, score: *mut f64) -> SgisStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        if score.is_null() {
            return Err(Fail(SgisStatus::NullPointer, "score is null".into()));
        }
        match r.file.result.best_score() {
            Some(s) => {
                *score = s;
                Ok(())
            }
            None => Err(Error::EmptyPool.into()),
        }
    })
}

/// Copies the best setting into `buf` (capacity `cap`); `written` receives the
/// dimension count even when the buffer is too small.
///
/// # Safety
/// `run` must be live, `buf` must hold `cap` doubles, `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_best_setting(
    run: *const SgisRun,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> SgisStatus {
    guard(|| {
        let r = ref_arg(run, "run")?;
        if written.is_null() {
            return Err(Fail(SgisStatus::NullPointer, "written is null".into()));
        }
        let best = r.file.result.best().ok_or(Error::EmptyPool)?;
        let v = best.setting.values();
        *written = v.len();
        if cap < v.len() {
            return Err(Fail(
                SgisStatus::BufferTooSmall,
                format!("need {} values, buffer holds {cap}", v.len()),
            ));
        }
        if buf.is_null() {
            return Err(Fail(SgisStatus::NullPointer, "buf is null".into()));
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Single-session replays spent by the run, 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_replay_count(run: *const SgisRun) -> u64 {
    run.as_ref()
        .map_or(0, |r| r.file.result.ledger.replay_count)
}

/// Importance reweightings spent by the run, 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_reweigh_count(run: *const SgisRun) -> u64 {
    run.as_ref()
        .map_or(0, |r| r.file.result.ledger.is_reweigh_count)
}

/// The full result document, identical to what the CLI writes; free with
/// [`sgis_string_free`]. Null for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_to_json(run: *const SgisRun) -> *mut c_char {
    run.as_ref()
        .map_or(ptr::null_mut(), |r| into_c_string(r.file.to_json()))
}

/// # Safety
/// `run` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn sgis_run_free(run: *mut SgisRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Sum over `len` dimensions of the normal log-density of `x`.
///
/// # Safety
/// `x`, `mean`, `sigma` must each hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgis_gaussian_logdensity(
    x: *const f64,
    mean: *const f64,
    sigma: *const f64,
    len: usize,
    out: *mut f64,
) -> SgisStatus {
    guard(|| {
        if out.is_null() {
            return Err(Fail(SgisStatus::NullPointer, "out is null".into()));
        }
        *out = gaussian_logdensity(
            slice_arg(x, len, "x")?,
            slice_arg(mean, len, "mean")?,
            slice_arg(sigma, len, "sigma")?,
        )?;
        Ok(())
    })
}
