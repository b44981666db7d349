#ifndef KINSWITCH_H
#define KINSWITCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_NULL_POINTER = 1,
  KS_STATUS_INVALID_ARGUMENT = 2,
  KS_STATUS_CONFIG = 3,
  KS_STATUS_TIME_STEP = 4,
  KS_STATUS_MODEL = 5,
  KS_STATUS_DOMAIN = 6,
  KS_STATUS_MASS_MISMATCH = 7,
  KS_STATUS_PANIC = 8,
} KsStatus;

/**
 * Opaque experiment configuration.
 */
typedef struct KsConfig KsConfig;

/**
 * Opaque running Monte Carlo replica.
 */
typedef struct KsSimulation KsSimulation;

/**
 * Statistics of one label.
 */
typedef struct KsLabelStats {
  uint64_t count;
  double rho;
  double moment;
  /**
   * NaN when the label is empty.
   */
  double mean;
} KsLabelStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL
 * terminated, truncated to `len`) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t ks_last_error_message(char *buf, uintptr_t len);

/**
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KsStatus ks_config_from_preset(const char *name, struct KsConfig **out);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KsStatus ks_config_from_toml(const char *text, struct KsConfig **out);

/**
 * Applies one `dotted.key=value` override in place.
 *
 * # Safety
 * `cfg` must come from this library and `kv` be NUL-terminated.
 */
enum KsStatus ks_config_override(struct KsConfig *cfg, const char *kv);

/**
 * # Safety
 * `cfg` must be null or come from this library and not be used again.
 */
void ks_config_free(struct KsConfig *cfg);

/**
 * Samples the initial population of replica `replica`.
 *
 * # Safety
 * `cfg` must come from this library and `out` be a valid pointer.
 */
enum KsStatus ks_simulation_new(const struct KsConfig *cfg,
                                uint64_t replica,
                                struct KsSimulation **out);

/**
 * Advances by `steps` time steps.
 *
 * # Safety
 * `sim` must come from this library.
 */
enum KsStatus ks_simulation_step(struct KsSimulation *sim, uint64_t steps);

/**
 * # Safety
 * `sim` must come from this library and `out` be a valid pointer.
 */
enum KsStatus ks_simulation_time(const struct KsSimulation *sim, double *out);

/**
 * Number of wealths clamped to zero so far.
 *
 * # Safety
 * `sim` must come from this library and `out` be a valid pointer.
 */
enum KsStatus ks_simulation_clamped(const struct KsSimulation *sim, uint64_t *out);

/**
 * Statistics of label `label` (1-based).
 *
 * # Safety
 * `sim` must come from this library and `out` be a valid pointer.
 */
enum KsStatus ks_simulation_label_stats(const struct KsSimulation *sim,
                                        uint32_t label,
                                        struct KsLabelStats *out);

/**
 * # Safety
 * `sim` must be null or come from this library and not be used again.
 */
void ks_simulation_free(struct KsSimulation *sim);

/**
 * Equilibrium mass ratio of the two-label trade model.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KsStatus ks_stationary_alpha(double b11_12,
                                  double b22_12,
                                  double b12_11,
                                  double b12_22,
                                  double *out);

/**
 * Label-1 steady density of the quasi-invariant limit at `v`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KsStatus ks_stationary_density(double v,
                                    double alpha,
                                    double omega1,
                                    double omega2,
                                    double zeta,
                                    double rho_bar,
                                    double moment_bar,
                                    double *out);

/**
 * W1 distance between two weighted point sets of equal mass.
 *
 * # Safety
 * Each `points`/`weights` pointer must address `n` readable doubles.
 */
enum KsStatus ks_wasserstein1(const double *points_a,
                              const double *weights_a,
                              uintptr_t n_a,
                              const double *points_b,
                              const double *weights_b,
                              uintptr_t n_b,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINSWITCH_H */
