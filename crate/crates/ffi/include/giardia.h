#ifndef GIARDIA_H
#define GIARDIA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GiardiaDoseUnit {
  GIARDIA_DOSE_UNIT_MICROGRAM_PER_ML = 0,
  GIARDIA_DOSE_UNIT_MICRO_MOLAR = 1,
} GiardiaDoseUnit;

typedef enum GiardiaProfile {
  /**
   * eta used as configured, with a warning when it is too small.
   */
  GIARDIA_PROFILE_PAPER = 0,
  /**
   * eta raised to the smallest value that certifies the envelope.
   */
  GIARDIA_PROFILE_THEOREM = 1,
} GiardiaProfile;

typedef enum GiardiaStatus {
  GIARDIA_STATUS_OK = 0,
  /**
   * Argument outside the domain of the operation.
   */
  GIARDIA_STATUS_DOMAIN = 1,
  /**
   * One or more parameter or configuration invariants failed.
   */
  GIARDIA_STATUS_VALIDATION = 2,
  /**
   * Non-finite state or a negative population during integration.
   */
  GIARDIA_STATUS_NUMERIC = 3,
  /**
   * Malformed input file.
   */
  GIARDIA_STATUS_PARSE = 4,
  GIARDIA_STATUS_CONFIG = 5,
  GIARDIA_STATUS_IO = 6,
  GIARDIA_STATUS_NULL_POINTER = 7,
  GIARDIA_STATUS_INVALID_UTF8 = 8,
  GIARDIA_STATUS_OUT_OF_RANGE = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  GIARDIA_STATUS_PANIC = 10,
} GiardiaStatus;

/**
 * Opaque run configuration.
 */
typedef struct GiardiaConfig GiardiaConfig;

/**
 * Opaque simulation result.
 */
typedef struct GiardiaTrajectory GiardiaTrajectory;

/**
 * Plant constants.
 */
typedef struct GiardiaModelParams {
  double r0;
  double k;
  double beta_d;
  double beta_m;
  double w_m;
  double sigma;
} GiardiaModelParams;

/**
 * Designer bounds of the adaptive dose law.
 */
typedef struct GiardiaAdaptiveConfig {
  double r0_bar;
  double beta_m_bar;
  double beta_d_low;
  double eta;
  double delta;
} GiardiaAdaptiveConfig;

/**
 * One trajectory sample. `envelope` is meaningful only when `has_envelope`
 * is non-zero.
 */
typedef struct GiardiaRecord {
  double t;
  double x1;
  double x2;
  double x2_hat;
  double u_ugml;
  double u_um;
  double r;
  double envelope;
  uint8_t has_envelope;
  double pi;
} GiardiaRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *giardia_last_error(void);

/**
 * Published plant constants.
 */
struct GiardiaModelParams giardia_model_params_published(void);

/**
 * Published adaptive design (`eta = delta`).
 */
struct GiardiaAdaptiveConfig giardia_adaptive_config_published(void);

/**
 * Growth rate `r` at state `(x1, x2)` under dose `u` (μg/ml).
 *
 * # Safety
 * `params` and `out` must be valid pointers or NULL.
 */
enum GiardiaStatus giardia_growth_rate(const struct GiardiaModelParams *params,
                                       double x1,
                                       double x2,
                                       double u,
                                       double *out);

/**
 * Plant vector field at `(x1, x2)` under dose `u`.
 *
 * # Safety
 * All pointers must be valid or NULL.
 */
enum GiardiaStatus giardia_vector_field(const struct GiardiaModelParams *params,
                                        double x1,
                                        double x2,
                                        double u,
                                        double *dx1,
                                        double *dx2);

/**
 * Open-loop equilibrium `(K, x2*)`.
 *
 * # Safety
 * All pointers must be valid or NULL.
 */
enum GiardiaStatus giardia_open_loop_equilibrium(const struct GiardiaModelParams *params,
                                                 double *x1_star,
                                                 double *x2_star);

/**
 * Adaptive dose (μg/ml) for output `y` and observer state `x2_hat`.
 *
 * # Safety
 * `config` and `out` must be valid pointers or NULL.
 */
enum GiardiaStatus giardia_adaptive_dose(const struct GiardiaAdaptiveConfig *config,
                                         double y,
                                         double x2_hat,
                                         double *out);

/**
 * Smallest eta that certifies the envelope.
 *
 * # Safety
 * `out` must be a valid pointer or NULL.
 */
enum GiardiaStatus giardia_min_eta(double beta_m_bar,
                                   double x2_0_abs,
                                   double x2_hat_0_abs,
                                   double delta,
                                   double *out);

/**
 * Known-parameter constant dose (μg/ml) for decay rate `delta`.
 *
 * # Safety
 * `params` and `out` must be valid pointers or NULL.
 */
enum GiardiaStatus giardia_constant_dose(const struct GiardiaModelParams *params,
                                         double delta,
                                         double *out);

/**
 * Closed-form Riccati bound on the population at time `t`.
 *
 * # Safety
 * `out` must be a valid pointer or NULL.
 */
enum GiardiaStatus giardia_riccati_bound(double y0, double k, double delta, double t, double *out);

/**
 * Observer slack `pi(t)`.
 *
 * # Safety
 * `out` must be a valid pointer or NULL.
 */
enum GiardiaStatus giardia_pi_bound(double lambda,
                                    double x2_0_abs,
                                    double x2_hat_0_abs,
                                    double t,
                                    double *out);

/**
 * Converts a dose from `from` into the other unit.
 *
 * # Safety
 * `out` must be a valid pointer or NULL.
 */
enum GiardiaStatus giardia_convert_dose(double value, enum GiardiaDoseUnit from, double *out);

/**
 * Shipped default configuration.
 *
 * # Safety
 * `out` must be a valid pointer or NULL.
 */
enum GiardiaStatus giardia_config_default(struct GiardiaConfig **out);

/**
 * Loads and validates a JSON configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string or NULL; `out` valid or NULL.
 */
enum GiardiaStatus giardia_config_load(const char *path, struct GiardiaConfig **out);

/**
 * Selects the dose strategy: `open-loop`, `constant`, `adaptive`,
 * `schedule` or `schedule:<file>`.
 *
 * # Safety
 * `config` must come from this library; `strategy` NUL-terminated.
 */
enum GiardiaStatus giardia_config_set_strategy(struct GiardiaConfig *config, const char *strategy);

/**
 * # Safety
 * `config` must come from this library.
 */
enum GiardiaStatus giardia_config_set_profile(struct GiardiaConfig *config,
                                              enum GiardiaProfile profile);

/**
 * Sets the horizon, step and recording stride. Validated on simulate.
 *
 * # Safety
 * `config` must come from this library.
 */
enum GiardiaStatus giardia_config_set_grid(struct GiardiaConfig *config,
                                           double t_end,
                                           double dt,
                                           size_t record_stride);

/**
 * # Safety
 * `config` must come from this library and not be used afterwards.
 */
void giardia_config_free(struct GiardiaConfig *config);

/**
 * Integrates the closed loop described by `config`.
 *
 * # Safety
 * `config` must come from this library; `out` valid or NULL.
 */
enum GiardiaStatus giardia_simulate(const struct GiardiaConfig *config,
                                    struct GiardiaTrajectory **out);

/**
 * Number of recorded samples.
 *
 * # Safety
 * `traj` must come from this library; `out` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_len(const struct GiardiaTrajectory *traj, size_t *out);

/**
 * # Safety
 * `traj` must come from this library; `out` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_get(const struct GiardiaTrajectory *traj,
                                          size_t index,
                                          struct GiardiaRecord *out);

/**
 * Number of configuration warnings raised by the run.
 *
 * # Safety
 * `traj` must come from this library; `out` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_warning_count(const struct GiardiaTrajectory *traj,
                                                    size_t *out);

/**
 * Warning `index`; the string lives as long as `traj`.
 *
 * # Safety
 * `traj` must come from this library; `out` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_warning(const struct GiardiaTrajectory *traj,
                                              size_t index,
                                              const char **out);

/**
 * Writes the trajectory in the CLI's CSV format.
 *
 * # Safety
 * `traj` must come from this library; `path` NUL-terminated.
 */
enum GiardiaStatus giardia_trajectory_write_csv(const struct GiardiaTrajectory *traj,
                                                const char *path);

/**
 * Counts samples above `y(0) e^(-delta t)`.
 *
 * # Safety
 * `traj` must come from this library; `violations` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_check_envelope(const struct GiardiaTrajectory *traj,
                                                     double delta,
                                                     size_t *violations);

/**
 * Counts samples where `|x2| > x2_hat + pi(t)`.
 *
 * # Safety
 * `traj` must come from this library; `violations` valid or NULL.
 */
enum GiardiaStatus giardia_trajectory_check_observer(const struct GiardiaTrajectory *traj,
                                                     double lambda,
                                                     double x2_0_abs,
                                                     double x2_hat_0_abs,
                                                     size_t *violations);

/**
 * # Safety
 * `traj` must come from this library and not be used afterwards.
 */
void giardia_trajectory_free(struct GiardiaTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIARDIA_H */
