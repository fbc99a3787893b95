#ifndef DRSOM_H
#define DRSOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DrsomStatus {
  DRSOM_STATUS_OK = 0,
  DRSOM_STATUS_NULL_POINTER = 1,
  DRSOM_STATUS_INVALID_ARGUMENT = 2,
  DRSOM_STATUS_DIMENSION_MISMATCH = 3,
  DRSOM_STATUS_NON_FINITE_START = 4,
  DRSOM_STATUS_IO = 5,
  DRSOM_STATUS_PARSE = 6,
  DRSOM_STATUS_SOLVER = 7,
  DRSOM_STATUS_PANIC = 8,
} DrsomStatus;

typedef enum DrsomMode {
  DRSOM_MODE_TRUST_RADIUS = 0,
  DRSOM_MODE_RADIUS_FREE = 1,
  DRSOM_MODE_FIXED_RADIUS = 2,
} DrsomMode;

typedef enum DrsomModel {
  DRSOM_MODEL_HVP_EXACT = 0,
  DRSOM_MODEL_HVP_FD = 1,
  DRSOM_MODEL_INTERPOLATION = 2,
} DrsomModel;

typedef enum DrsomRunStatus {
  DRSOM_RUN_STATUS_CONVERGED = 0,
  DRSOM_RUN_STATUS_MAX_ITER = 1,
  DRSOM_RUN_STATUS_STALLED = 2,
  DRSOM_RUN_STATUS_TIME_LIMIT = 3,
  DRSOM_RUN_STATUS_ERROR = 4,
} DrsomRunStatus;

// Solver settings.
typedef struct DrsomConfig DrsomConfig;

// An objective function.
typedef struct DrsomProblem DrsomProblem;

// Outcome of a run.
typedef struct DrsomResult DrsomResult;

// `f(x)` for `x` of length `n`.
typedef double (*DrsomValueFn)(const double *x, size_t n, void *user_data);

// Writes the gradient at `x` into `out`, both of length `n`.
typedef void (*DrsomGradientFn)(const double *x, size_t n, double *out, void *user_data);

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *drsom_version(void);

// Length in bytes of the calling thread's last error message, excluding
// the terminating NUL.
size_t drsom_last_error_length(void);

// Copies the last error message into `buf` (truncating, always
// NUL-terminated) and returns the number of bytes written without the NUL.
//
// # Safety
// `buf` must point to `len` writable bytes.
size_t drsom_last_error_message(char *buf, size_t len);

// New configuration with library defaults.
struct DrsomConfig *drsom_config_new(void);

// Configuration from its JSON encoding.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum DrsomStatus drsom_config_from_json(const char *json, struct DrsomConfig **out);

// # Safety
// `cfg` must come from this library and not be used afterwards.
void drsom_config_free(struct DrsomConfig *cfg);

// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_mode(struct DrsomConfig *cfg, enum DrsomMode mode);

// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_model(struct DrsomConfig *cfg, enum DrsomModel model);

// Gradient-norm tolerance and iteration cap.
//
// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_limits(struct DrsomConfig *cfg, double tol_g, size_t max_iter);

// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_seed(struct DrsomConfig *cfg, uint64_t seed);

// Nonzero `enabled` turns on the periodic corrector with default settings.
//
// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_corrector(struct DrsomConfig *cfg, int enabled);

// Curvature estimate used by the fixed-radius mode.
//
// # Safety
// `cfg` must be a live configuration handle.
enum DrsomStatus drsom_config_set_curvature_estimate(struct DrsomConfig *cfg, double m_est);

// Problem defined by C callbacks. The starting point defaults to zero.
// `user_data` is passed through untouched and must outlive the handle.
//
// # Safety
// The callbacks must be safe to call with any `x` of length `n`; `out`
// must be writable.
enum DrsomStatus drsom_problem_from_callbacks(size_t n,
                                              DrsomValueFn value,
                                              DrsomGradientFn gradient,
                                              void *user_data,
                                              struct DrsomProblem **out);

// Problem from an instance file written by `drsom gen`.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum DrsomStatus drsom_problem_from_instance_file(const char *path, struct DrsomProblem **out);

// Built-in test problem by name (`rosenbrock`, `quadratic`, `beale`,
// `himmelblau`, `quartic`), with its customary start.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum DrsomStatus drsom_problem_builtin(const char *name,
                                       size_t n,
                                       uint64_t seed,
                                       struct DrsomProblem **out);

// # Safety
// `problem` must be a live problem handle.
size_t drsom_problem_dim(const struct DrsomProblem *problem);

// Copies the problem's default starting point into `out` (length `n`).
//
// # Safety
// `problem` must be live and `out` must hold `n` doubles.
enum DrsomStatus drsom_problem_start(const struct DrsomProblem *problem, double *out, size_t n);

// # Safety
// `problem` must come from this library and not be used afterwards.
void drsom_problem_free(struct DrsomProblem *problem);

// Minimizes from `x0` (length `n`), or from the problem's default start
// when `x0` is null. A run that stops without converging still returns
// `Ok`; inspect the result status.
//
// # Safety
// Handles must be live; `x0` must be null or hold `n` doubles; `out`
// must be writable.
enum DrsomStatus drsom_minimize(const struct DrsomProblem *problem,
                                const struct DrsomConfig *config,
                                const double *x0,
                                size_t n,
                                struct DrsomResult **out);

// # Safety
// `result` must be a live result handle.
enum DrsomRunStatus drsom_result_status(const struct DrsomResult *result);

// # Safety
// `result` must be a live result handle.
size_t drsom_result_iterations(const struct DrsomResult *result);

// NaN for a null handle.
//
// # Safety
// `result` must be a live result handle.
double drsom_result_f(const struct DrsomResult *result);

// NaN for a null handle.
//
// # Safety
// `result` must be a live result handle.
double drsom_result_gnorm(const struct DrsomResult *result);

// Copies the final iterate into `out` (length `n`).
//
// # Safety
// `result` must be live and `out` must hold `n` doubles.
enum DrsomStatus drsom_result_x(const struct DrsomResult *result, double *out, size_t n);

// Function, gradient and HVP evaluation counts of the run.
//
// # Safety
// `result` must be live; each output pointer may be null.
enum DrsomStatus drsom_result_counts(const struct DrsomResult *result,
                                     uint64_t *n_f,
                                     uint64_t *n_g,
                                     uint64_t *n_hvp);

// # Safety
// `result` must come from this library and not be used afterwards.
void drsom_result_free(struct DrsomResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DRSOM_H */
