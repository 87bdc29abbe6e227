#ifndef SCBO_H
#define SCBO_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ScboStatus {
  SCBO_STATUS_OK = 0,
  SCBO_STATUS_NULL_POINTER = 1,
  SCBO_STATUS_INVALID_ARGUMENT = 2,
  SCBO_STATUS_UNKNOWN_BENCHMARK = 3,
  SCBO_STATUS_DIMENSION_MISMATCH = 4,
  SCBO_STATUS_DIVERGENCE = 5,
  SCBO_STATUS_NUMERICAL = 6,
  SCBO_STATUS_PANIC = 7,
  SCBO_STATUS_INTERNAL = 8,
} ScboStatus;

typedef enum ScboSmoother {
  SCBO_SMOOTHER_LOG_EXP = 0,
  SCBO_SMOOTHER_SQRT = 1,
} ScboSmoother;

typedef enum ScboNoiseMode {
  SCBO_NOISE_MODE_COMMON = 0,
  SCBO_NOISE_MODE_INDEPENDENT = 1,
} ScboNoiseMode;

/**
 * Opaque benchmark objective.
 */
typedef struct ScboObjective ScboObjective;

/**
 * Opaque result of one run.
 */
typedef struct ScboRunReport ScboRunReport;

typedef struct ScboObjectiveInfo {
  size_t dim;
  double lo;
  double hi;
  double f_min;
  double f_max;
  double kappa;
  double eta;
  double q;
} ScboObjectiveInfo;

typedef struct ScboSolverConfig {
  double lambda;
  double sigma;
  double beta;
  size_t n_particles;
  size_t dim;
  double h;
  double t_max;
  double mu0;
  double alpha;
  enum ScboNoiseMode noise_mode;
  uint64_t seed;
  double consensus_tol;
  uint64_t trace_every;
  double success_threshold;
} ScboSolverConfig;

typedef struct ScboRunSummary {
  double f_x_inf;
  double normalized_gap;
  double sol_err;
  double final_diameter;
  double t_final;
  uint64_t steps;
  bool success;
  bool converged;
} ScboRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next failing call.
 */
const char *scbo_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *scbo_version(void);

/**
 * Builds a benchmark objective (`example1`, `f1` .. `f5`).
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` a valid pointer.
 */
enum ScboStatus scbo_objective_new(const char *id,
                                   size_t dim,
                                   enum ScboSmoother smoother,
                                   struct ScboObjective **out);

/**
 * # Safety
 * `obj` must come from [`scbo_objective_new`] and not be used afterwards.
 */
void scbo_objective_free(struct ScboObjective *obj);

/**
 * # Safety
 * `obj` and `out` must be valid pointers.
 */
enum ScboStatus scbo_objective_info(const struct ScboObjective *obj, struct ScboObjectiveInfo *out);

/**
 * `f(x)`.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` to one.
 */
enum ScboStatus scbo_objective_value(const struct ScboObjective *obj,
                                     const double *x,
                                     size_t len,
                                     double *out);

/**
 * `f~(x, mu)`.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` to one.
 */
enum ScboStatus scbo_objective_smoothed(const struct ScboObjective *obj,
                                        const double *x,
                                        size_t len,
                                        double mu,
                                        double *out);

/**
 * Writes `grad_x f~(x, mu)` into `out` (`len` doubles).
 *
 * # Safety
 * `x` and `out` must each point to `len` doubles.
 */
enum ScboStatus scbo_objective_grad(const struct ScboObjective *obj,
                                    const double *x,
                                    size_t len,
                                    double mu,
                                    double *out);

/**
 * Fills `out` with the default solver configuration.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum ScboStatus scbo_solver_config_default(struct ScboSolverConfig *out);

/**
 * One seeded run with particles drawn uniformly from the objective's box.
 *
 * # Safety
 * All pointers must be valid; `*out` receives a handle to free with [`scbo_run_report_free`].
 */
enum ScboStatus scbo_run(const struct ScboObjective *obj,
                         const struct ScboSolverConfig *cfg,
                         struct ScboRunReport **out);

/**
 * # Safety
 * `report` must come from [`scbo_run`] and not be used afterwards.
 */
void scbo_run_report_free(struct ScboRunReport *report);

/**
 * # Safety
 * `report` and `out` must be valid pointers.
 */
enum ScboStatus scbo_run_report_summary(const struct ScboRunReport *report,
                                        struct ScboRunSummary *out);

/**
 * Copies the final consensus point into `out` (`len` must equal the dimension).
 *
 * # Safety
 * `out` must point to `len` doubles.
 */
enum ScboStatus scbo_run_report_x_inf(const struct ScboRunReport *report, double *out, size_t len);

/**
 * Full report as JSON. Free the string with [`scbo_string_free`].
 *
 * # Safety
 * `report` and `out` must be valid pointers.
 */
enum ScboStatus scbo_run_report_json(const struct ScboRunReport *report, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void scbo_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCBO_H */
