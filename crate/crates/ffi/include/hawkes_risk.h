#ifndef HAWKES_RISK_H
#define HAWKES_RISK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code of every fallible call.
typedef enum HrStatus {
  HR_STATUS_OK = 0,
  HR_STATUS_NULL_POINTER = 1,
  HR_STATUS_INVALID_UTF8 = 2,
  HR_STATUS_CONFIG = 3,
  HR_STATUS_PARAMETER = 4,
  HR_STATUS_UNSTABLE = 5,
  HR_STATUS_RUNAWAY = 6,
  // Diverging kernel, infinite variation, missing moment or log-domain fit.
  HR_STATUS_NUMERIC = 7,
  HR_STATUS_IO = 8,
  HR_STATUS_BUFFER_TOO_SMALL = 9,
  HR_STATUS_PANIC = 10,
} HrStatus;

// Experiment built from a JSON config.
typedef struct HrExperiment HrExperiment;

// Right-continuous step path on `[0, T]`.
typedef struct HrPath HrPath;

// Distances between the continuous risk path and its discrete scheme on
// one trial. `skorokhod` is NaN when either path has too many jumps for
// the exact computation.
typedef struct HrCoupleMetrics {
  double delta;
  uint64_t count;
  uint64_t count_delta;
  double risk;
  double risk_delta;
  double uniform;
  double sobolev;
  double skorokhod;
  double skorokhod_upper;
} HrCoupleMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `cap` bytes). Returns the full message length without the
// terminator. `buf` may be null to query the length.
size_t hr_last_error(char *buf, size_t cap);

// Library version as a static NUL-terminated string.
const char *hr_version(void);

// Release a string returned by the library. Null is ignored.
void hr_string_free(char *s);

// Parse and validate a JSON experiment config.
enum HrStatus hr_experiment_new(const char *json, struct HrExperiment **out);

void hr_experiment_free(struct HrExperiment *exp);

// Replace the master seed.
enum HrStatus hr_experiment_set_seed(struct HrExperiment *exp, uint64_t seed);

// Continuous risk path `R` of trial `trial`.
enum HrStatus hr_simulate_risk(const struct HrExperiment *exp, uint64_t trial, struct HrPath **out);

// Discrete risk path `R^Delta` of trial `trial`, driven by the same atoms
// as [`hr_simulate_risk`].
enum HrStatus hr_simulate_discrete_risk(const struct HrExperiment *exp,
                                        uint64_t trial,
                                        double delta,
                                        struct HrPath **out);

// Pathwise distances between `R` and `R^Delta` on trial `trial`.
enum HrStatus hr_couple(const struct HrExperiment *exp,
                        uint64_t trial,
                        double delta,
                        struct HrCoupleMetrics *out);

// Bound constants at step `delta` as a JSON object.
enum HrStatus hr_bounds_json(const struct HrExperiment *exp, double delta, char **out);

// Full convergence study as JSON. `workers == 0` uses every core.
enum HrStatus hr_convergence_json(const struct HrExperiment *exp, size_t workers, char **out);

// Bound-verification suite as JSON.
enum HrStatus hr_verify_json(const struct HrExperiment *exp, size_t workers, char **out);

// Step path with value `values[i]` on `[breaks[i], breaks[i+1])`.
// `breaks[0]` must be 0 and the breaks strictly increasing within `[0, horizon]`.
enum HrStatus hr_path_new(const double *breaks,
                          const double *values,
                          size_t len,
                          double horizon,
                          struct HrPath **out);

void hr_path_free(struct HrPath *path);

// Number of constant pieces; 0 for a null handle.
size_t hr_path_len(const struct HrPath *path);

// Horizon `T`; NaN for a null handle.
double hr_path_horizon(const struct HrPath *path);

// Value at time `t`; NaN for a null handle.
double hr_path_value_at(const struct HrPath *path, double t);

// Copy breaks and values into caller buffers of `cap` entries each.
enum HrStatus hr_path_copy(const struct HrPath *path, double *breaks, double *values, size_t cap);

// Sup-norm distance.
enum HrStatus hr_uniform_distance(const struct HrPath *f, const struct HrPath *g, double *out);

// Fractional Sobolev `W^{eta,1}` distance, `0 < eta < 1`.
enum HrStatus hr_sobolev_distance(const struct HrPath *f,
                                  const struct HrPath *g,
                                  double eta,
                                  double *out);

// Exact Skorokhod J1 distance.
enum HrStatus hr_skorokhod_distance(const struct HrPath *f, const struct HrPath *g, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAWKES_RISK_H */
