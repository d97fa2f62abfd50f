#ifndef SGIS_H
#define SGIS_H

#include <stddef.h>
#include <stdint.h>

typedef enum SgisStatus {
  SGIS_STATUS_OK = 0,
  SGIS_STATUS_NULL_POINTER = 1,
  SGIS_STATUS_INVALID_UTF8 = 2,
  SGIS_STATUS_INVALID_CONFIG = 3,
  SGIS_STATUS_INVALID_INPUT = 4,
  SGIS_STATUS_PARSE = 5,
  SGIS_STATUS_IO = 6,
  SGIS_STATUS_EMPTY_POOL = 7,
  SGIS_STATUS_INCOMPATIBLE = 8,
  SGIS_STATUS_NUMERIC = 9,
  SGIS_STATUS_BUFFER_TOO_SMALL = 10,
  SGIS_STATUS_PANIC = 11,
} SgisStatus;

// A session log and the digest of its serialized form.
typedef struct SgisLog SgisLog;

// A validated run configuration.
typedef struct SgisProblem SgisProblem;

// Output of a search or baseline run.
typedef struct SgisRun SgisRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
const char *sgis_last_error(void);

// Library version, static storage.
const char *sgis_version(void);

// # Safety
// `s` must be null or a string returned by this library, freed at most once.
void sgis_string_free(char *s);

// Parses and validates a TOML run configuration. `seed_override` may be null.
//
// # Safety
// `toml` must be a NUL-terminated string, `seed_override` null or valid, `out` writable.
enum SgisStatus sgis_problem_from_toml(const char *toml,
                                       const uint64_t *seed_override,
                                       struct SgisProblem **out);

// Number of parameter dimensions, 0 for a null handle.
//
// # Safety
// `problem` must be null or a live handle.
size_t sgis_problem_dims(const struct SgisProblem *problem);

// # Safety
// `problem` must be null or a handle from [`sgis_problem_from_toml`], freed once.
void sgis_problem_free(struct SgisProblem *problem);

// Generates the configured number of synthetic sessions from the problem's seed.
//
// # Safety
// `problem` must be a live handle and `out` writable.
enum SgisStatus sgis_log_generate(const struct SgisProblem *problem, struct SgisLog **out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum SgisStatus sgis_log_load(const char *path, struct SgisLog **out);

// # Safety
// `log` must be a live handle and `path` a NUL-terminated string.
enum SgisStatus sgis_log_save(const struct SgisLog *log, const char *path);

// Number of sessions, 0 for a null handle.
//
// # Safety
// `log` must be null or a live handle.
size_t sgis_log_len(const struct SgisLog *log);

// Hex SHA-256 of the serialized log; free with [`sgis_string_free`]. Null for a null handle.
//
// # Safety
// `log` must be null or a live handle.
char *sgis_log_digest(const struct SgisLog *log);

// # Safety
// `log` must be null or a handle from this library, freed once.
void sgis_log_free(struct SgisLog *log);

// Runs the SGIS search. An everywhere-infeasible problem still yields a run with
// an empty pool.
//
// # Safety
// Handles must be live and `out` writable.
enum SgisStatus sgis_run_sgis(const struct SgisProblem *problem,
                              const struct SgisLog *log,
                              struct SgisRun **out);

// Direct simulation of a `points_per_dim^m` grid.
//
// # Safety
// Handles must be live and `out` writable.
enum SgisStatus sgis_run_enumerate(const struct SgisProblem *problem,
                                   const struct SgisLog *log,
                                   size_t points_per_dim,
                                   struct SgisRun **out);

// Importance-sampling hill-climb from `start` (`len` values, clipped into the space).
//
// # Safety
// Handles must be live, `start` must hold `len` doubles and `out` be writable.
enum SgisStatus sgis_run_is_baseline(const struct SgisProblem *problem,
                                     const struct SgisLog *log,
                                     const double *start,
                                     size_t len,
                                     struct SgisRun **out);

// Best direct score; `SGIS_STATUS_EMPTY_POOL` when nothing was feasible.
//
// # Safety
// `run` must be a live handle and `score` writable.
enum SgisStatus sgis_run_best_score(const struct SgisRun *run, double *score);

// Copies the best setting into `buf` (capacity `cap`); `written` receives the
// dimension count even when the buffer is too small.
//
// # Safety
// `run` must be live, `buf` must hold `cap` doubles, `written` must be writable.
enum SgisStatus sgis_run_best_setting(const struct SgisRun *run,
                                      double *buf,
                                      size_t cap,
                                      size_t *written);

// Single-session replays spent by the run, 0 for a null handle.
//
// # Safety
// `run` must be null or a live handle.
uint64_t sgis_run_replay_count(const struct SgisRun *run);

// Importance reweightings spent by the run, 0 for a null handle.
//
// # Safety
// `run` must be null or a live handle.
uint64_t sgis_run_reweigh_count(const struct SgisRun *run);

// The full result document, identical to what the CLI writes; free with
// [`sgis_string_free`]. Null for a null handle.
//
// # Safety
// `run` must be null or a live handle.
char *sgis_run_to_json(const struct SgisRun *run);

// # Safety
// `run` must be null or a handle from this library, freed once.
void sgis_run_free(struct SgisRun *run);

// Sum over `len` dimensions of the normal log-density of `x`.
//
// # Safety
// `x`, `mean`, `sigma` must each hold `len` doubles; `out` must be writable.
enum SgisStatus sgis_gaussian_logdensity(const double *x,
                                         const double *mean,
                                         const double *sigma,
                                         size_t len,
                                         double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* SGIS_H */
