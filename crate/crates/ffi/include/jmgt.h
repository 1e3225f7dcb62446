#ifndef JMGT_H
#define JMGT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum JmgtRunStatus {
  JMGT_RUN_STATUS_REACHED_T_END = 0,
  JMGT_RUN_STATUS_BLOW_UP_DETECTED = 1,
  JMGT_RUN_STATUS_STEP_UNDERFLOW = 2,
  JMGT_RUN_STATUS_NON_FINITE = 3,
} JmgtRunStatus;

typedef enum JmgtStatus {
  JMGT_STATUS_OK = 0,
  JMGT_STATUS_NULL_POINTER = 1,
  JMGT_STATUS_INVALID_ARGUMENT = 2,
  JMGT_STATUS_CONFIG = 3,
  JMGT_STATUS_HYPOTHESIS = 4,
  JMGT_STATUS_NUMERICAL = 5,
  JMGT_STATUS_IO = 6,
  JMGT_STATUS_BUFFER_TOO_SMALL = 7,
  JMGT_STATUS_OUT_OF_RANGE = 8,
  JMGT_STATUS_PANIC = 9,
} JmgtStatus;

/**
 * A validated run configuration with its Galerkin system.
 */
typedef struct JmgtModel JmgtModel;

/**
 * A finished simulation with its samples and monitor records.
 */
typedef struct JmgtRun JmgtRun;

/**
 * Energies of one state with their coercivity gaps.
 */
typedef struct JmgtEnergies {
  double f_n;
  double f_n_gap;
  double f2;
  double f2_gap;
} JmgtEnergies;

/**
 * Summary of a finished run. The bracket is meaningful only when `has_bracket` is 1.
 */
typedef struct JmgtRunInfo {
  enum JmgtRunStatus status;
  double t_final;
  int32_t has_bracket;
  double bracket_lo;
  double bracket_hi;
  size_t n_samples;
  uint64_t accepted_steps;
  uint64_t rejected_steps;
} JmgtRunInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *jmgt_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next
 * call into the library from the same thread.
 */
const char *jmgt_last_error_message(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from a `jmgt_*` function that documents an owned string and must
 * not have been freed already.
 */
void jmgt_string_free(char *s);

/**
 * Parses a JSON run configuration and builds the model.
 *
 * # Safety
 * `json` must be a valid NUL-terminated UTF-8 string and `out` a valid pointer.
 */
enum JmgtStatus jmgt_model_new(const char *json, struct JmgtModel **out);

/**
 * # Safety
 * `model` must be NULL or a handle from [`jmgt_model_new`] not yet freed.
 */
void jmgt_model_free(struct JmgtModel *model);

/**
 * Number of retained modes N; the flat state has length 5N. Returns 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t jmgt_model_n_modes(const struct JmgtModel *model);

/**
 * Writes the flat initial state `[a, b, c, va, wa]` of the configured data into `out`.
 * Certified data are built by running the certificate.
 *
 * # Safety
 * `model` must be a live handle and `out` must hold `len` doubles.
 */
enum JmgtStatus jmgt_model_initial_state(const struct JmgtModel *model, double *out, size_t len);

/**
 * Evaluates the Galerkin right-hand side at `(t, y)` into `dy`; both have length `len = 5N`.
 *
 * # Safety
 * `y` and `dy` must each hold `len` doubles and must not overlap.
 */
enum JmgtStatus jmgt_model_rhs(const struct JmgtModel *model,
                               double t,
                               const double *y,
                               double *dy,
                               size_t len);

/**
 * Energies of a flat state.
 *
 * # Safety
 * `y` must hold `len` doubles and `out` must be valid.
 */
enum JmgtStatus jmgt_model_energies(const struct JmgtModel *model,
                                    const double *y,
                                    size_t len,
                                    struct JmgtEnergies *out);

/**
 * Guaranteed local existence time for data of size `m` with the model's parameters.
 *
 * # Safety
 * `out` must be valid.
 */
enum JmgtStatus jmgt_model_existence_time(const struct JmgtModel *model, double m, double *out);

/**
 * Builds a blow-up certificate for horizon `t0` and returns it as an owned JSON string.
 *
 * # Safety
 * `out` must be valid; the string must be released with [`jmgt_string_free`].
 */
enum JmgtStatus jmgt_model_certify(const struct JmgtModel *model,
                                   double t0,
                                   double margin,
                                   char **out);

/**
 * Runs the configured simulation with all monitors. Files are not written.
 *
 * # Safety
 * `out` must be valid; the run must be released with [`jmgt_run_free`].
 */
enum JmgtStatus jmgt_run_new(const struct JmgtModel *model, struct JmgtRun **out);

/**
 * # Safety
 * `run` must be NULL or a handle from [`jmgt_run_new`] not yet freed.
 */
void jmgt_run_free(struct JmgtRun *run);

/**
 * # Safety
 * `run` must be a live handle and `out` valid.
 */
enum JmgtStatus jmgt_run_info(const struct JmgtRun *run, struct JmgtRunInfo *out);

/**
 * Copies sample `index` into `t_out` and the flat state buffer `y_out` of length `len = 5N`.
 *
 * # Safety
 * `t_out` must be valid and `y_out` must hold `len` doubles.
 */
enum JmgtStatus jmgt_run_sample(const struct JmgtRun *run,
                                size_t index,
                                double *t_out,
                                double *y_out,
                                size_t len);

/**
 * The run report (outcome, monitor summary, config echo) as an owned JSON string.
 *
 * # Safety
 * `out` must be valid; release the string with [`jmgt_string_free`].
 */
enum JmgtStatus jmgt_run_report_json(const struct JmgtRun *run, char **out);

/**
 * The run's monitor time series as an owned CSV string.
 *
 * # Safety
 * `out` must be valid; release the string with [`jmgt_string_free`].
 */
enum JmgtStatus jmgt_run_csv(const struct JmgtRun *run, char **out);

/**
 * Exact solution of one linear mode `τa‴ + αa″ + βλa′ + γλa = 0` from `(a, a′, a″)` at time 0.
 * Writes `(a, a′, a″)(t)` into `out[0..3]`.
 *
 * # Safety
 * `out` must hold 3 doubles.
 */
enum JmgtStatus jmgt_modal_solution(double tau,
                                    double alpha,
                                    double beta,
                                    double gamma,
                                    double lambda,
                                    double a0,
                                    double b0,
                                    double c0,
                                    double t,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JMGT_H */
