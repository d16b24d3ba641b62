#ifndef VALSE_H
#define VALSE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ValseStatus {
  VALSE_STATUS_OK = 0,
  VALSE_STATUS_NULL_POINTER = 1,
  VALSE_STATUS_INVALID_ARGUMENT = 2,
  VALSE_STATUS_DEGENERATE = 3,
  VALSE_STATUS_STATE = 4,
  VALSE_STATUS_SINGULAR = 5,
  VALSE_STATUS_GENERATION = 6,
  VALSE_STATUS_PARSE = 7,
  VALSE_STATUS_VALIDATION = 8,
  VALSE_STATUS_IO = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  VALSE_STATUS_INTERNAL = 10,
} ValseStatus;

typedef enum ValseHeuristic {
  VALSE_HEURISTIC_MIXTURE = 1,
  VALSE_HEURISTIC_SINGLE = 2,
} ValseHeuristic;

typedef enum ValseMode {
  VALSE_MODE_FULL = 0,
  VALSE_MODE_POINT = 1,
} ValseMode;

/**
 * Engine settings. Create with [`valse_config_new`].
 */
typedef struct ValseConfig ValseConfig;

/**
 * Output of [`valse_estimate`].
 */
typedef struct ValseResult ValseResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread. The pointer stays valid until
 * the next failing call on the same thread. Empty if nothing failed yet.
 */
const char *valse_last_error_message(void);

const char *valse_version(void);

/**
 * New config with default settings. Never null.
 */
struct ValseConfig *valse_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`valse_config_new`] and not be freed yet, or be null.
 */
void valse_config_free(struct ValseConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_heuristic(struct ValseConfig *cfg, enum ValseHeuristic h);

/**
 * Mixture size used by [`ValseHeuristic::Mixture`].
 *
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_mixture_size(struct ValseConfig *cfg, size_t d);

/**
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_mode(struct ValseConfig *cfg, enum ValseMode mode);

/**
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_max_iters(struct ValseConfig *cfg, size_t iters);

/**
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_rel_tol(struct ValseConfig *cfg, double tol);

/**
 * Starting hyperparameters. With `learn` false they stay fixed.
 *
 * # Safety
 * `cfg` must be a live config handle or null.
 */
enum ValseStatus valse_config_set_hyperparams(struct ValseConfig *cfg,
                                              double nu,
                                              double rho,
                                              double tau,
                                              bool learn);

/**
 * Run the estimator on `m` samples `re[i] + j im[i]` taken at `indices[i]`
 * of a length-`n` signal. `cfg` may be null for defaults. On success `*out`
 * receives a result handle.
 *
 * # Safety
 * The three arrays must hold `m` readable elements, `out` must be writable.
 */
enum ValseStatus valse_estimate(const struct ValseConfig *cfg,
                                const size_t *indices,
                                const double *re,
                                const double *im,
                                size_t m,
                                size_t n,
                                struct ValseResult **out);

/**
 * # Safety
 * `res` must come from [`valse_estimate`] and not be freed yet, or be null.
 */
void valse_result_free(struct ValseResult *res);

/**
 * Number of detected components, 0 for a null handle.
 *
 * # Safety
 * `res` must be a live result handle or null.
 */
size_t valse_result_k_hat(const struct ValseResult *res);

/**
 * # Safety
 * `res` must be a live result handle or null.
 */
size_t valse_result_iterations(const struct ValseResult *res);

/**
 * # Safety
 * `res` must be a live result handle or null.
 */
bool valse_result_converged(const struct ValseResult *res);

/**
 * Length of the reconstructed signal, 0 for a null handle.
 *
 * # Safety
 * `res` must be a live result handle or null.
 */
size_t valse_result_signal_len(const struct ValseResult *res);

/**
 * # Safety
 * `res` must be a live result handle; the out pointers must be writable.
 */
enum ValseStatus valse_result_hyperparams(const struct ValseResult *res,
                                          double *nu,
                                          double *rho,
                                          double *tau);

/**
 * Frequency estimates in `[-pi, pi)`. `cap` must be at least `k_hat`.
 *
 * # Safety
 * `freqs` must have `cap` writable elements.
 */
enum ValseStatus valse_result_frequencies(const struct ValseResult *res, double *freqs, size_t cap);

/**
 * Weight estimates, aligned with the frequencies.
 *
 * # Safety
 * `re` and `im` must have `cap` writable elements.
 */
enum ValseStatus valse_result_amplitudes(const struct ValseResult *res,
                                         double *re,
                                         double *im,
                                         size_t cap);

/**
 * Reconstructed signal over all `n` positions.
 *
 * # Safety
 * `re` and `im` must have `cap` writable elements.
 */
enum ValseStatus valse_result_signal(const struct ValseResult *res,
                                     double *re,
                                     double *im,
                                     size_t cap);

/**
 * `I_p(kappa) / I_0(kappa)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ValseStatus valse_bessel_ratio(int64_t p, double kappa, double *out);

/**
 * Concentration `k` with `I_m(k)/I_0(k) = I_1(kappa)/I_0(kappa)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ValseStatus valse_solve_concentration(int64_t m, double kappa, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALSE_H */
