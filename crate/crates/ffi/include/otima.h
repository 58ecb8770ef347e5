#ifndef OTIMA_H
#define OTIMA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum OtimaStatus {
  OTIMA_STATUS_OK = 0,
  OTIMA_STATUS_NULL_POINTER = 1,
  OTIMA_STATUS_INVALID_ARGUMENT = 2,
  OTIMA_STATUS_CONFIG = 3,
  OTIMA_STATUS_DOMAIN = 4,
  OTIMA_STATUS_NUMERICAL = 5,
  OTIMA_STATUS_FIT = 6,
  OTIMA_STATUS_IO = 7,
  OTIMA_STATUS_PANIC = 8,
} OtimaStatus;

typedef enum OtimaModel {
  OTIMA_MODEL_QUANTUM = 0,
  OTIMA_MODEL_CLASSICAL = 1,
} OtimaModel;

/**
 * Signal curve handle.
 */
typedef struct OtimaCurve OtimaCurve;

/**
 * Scenario handle.
 */
typedef struct OtimaScenario OtimaScenario;

/**
 * One scan point; times in s.
 */
typedef struct OtimaRecord {
  double tau;
  double s_res;
  double s_off;
  double s_n;
  double sigma_sn;
} OtimaRecord;

/**
 * Fitted fringe parameters with one-sigma errors, SI units.
 * `tau_off_err` is NaN for fixed-phase fits.
 */
typedef struct OtimaFringeFit {
  double v0;
  double sigma_w;
  double sigma_p;
  double tau_off;
  double v0_err;
  double sigma_w_err;
  double sigma_p_err;
  double tau_off_err;
  double chi2;
  size_t dof;
} OtimaFringeFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *otima_version(void);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next otima call on the same thread.
 */
const char *otima_last_error_message(void);

/**
 * Parse a scenario from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OtimaStatus otima_scenario_from_toml(const char *toml, struct OtimaScenario **out);

/**
 * Load a scenario from a TOML file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum OtimaStatus otima_scenario_from_file(const char *path, struct OtimaScenario **out);

/**
 * # Safety
 * `scenario` must come from this library and not be used afterwards. NULL is ignored.
 */
void otima_scenario_free(struct OtimaScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum OtimaStatus otima_scenario_set_model(struct OtimaScenario *scenario, enum OtimaModel model);

/**
 * Override one parameter, e.g. `"beam.tilt_mrad"` or `"gratings.*.n0_eff"`.
 * The scenario is left unchanged when the new value is rejected.
 *
 * # Safety
 * `scenario` must be a live handle and `path` a NUL-terminated string.
 */
enum OtimaStatus otima_scenario_set(struct OtimaScenario *scenario, const char *path, double value);

/**
 * Talbot time m d²/h in s.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum OtimaStatus otima_scenario_talbot_time(const struct OtimaScenario *scenario, double *out);

/**
 * Normalized signal S_N at delay `tau` (s) for the scenario's model.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum OtimaStatus otima_normalized_signal(const struct OtimaScenario *scenario,
                                         double tau,
                                         double *out);

/**
 * Scan the scenario's τ grid with its model.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum OtimaStatus otima_scan(const struct OtimaScenario *scenario, struct OtimaCurve **out);

/**
 * Build a curve from measured S_N values with S_off = 1. `sigma` may be
 * NULL for unweighted data; `tau` (s) must be strictly increasing.
 *
 * # Safety
 * `tau`, `s_n` and a non-NULL `sigma` must each point to `len` doubles.
 */
enum OtimaStatus otima_curve_from_arrays(const double *tau,
                                         const double *s_n,
                                         const double *sigma,
                                         size_t len,
                                         struct OtimaCurve **out);

/**
 * Number of records, 0 for NULL.
 *
 * # Safety
 * `curve` must be a live handle or NULL.
 */
size_t otima_curve_len(const struct OtimaCurve *curve);

/**
 * # Safety
 * `curve` must be a live handle and `out` a valid pointer.
 */
enum OtimaStatus otima_curve_get(const struct OtimaCurve *curve,
                                 size_t index,
                                 struct OtimaRecord *out);

/**
 * # Safety
 * `curve` must come from this library and not be used afterwards. NULL is ignored.
 */
void otima_curve_free(struct OtimaCurve *curve);

/**
 * Fit the fringe model to a curve. With `free_phase` false the phase is
 * pinned to `tau_off` (s); otherwise `tau_off` is fitted.
 *
 * # Safety
 * `curve` must be a live handle and `out` a valid pointer.
 */
enum OtimaStatus otima_fit_fringe(const struct OtimaCurve *curve,
                                  double tau_off,
                                  bool free_phase,
                                  struct OtimaFringeFit *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OTIMA_H */
