#ifndef PAOII_H
#define PAOII_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PaoiiStatus {
  PAOII_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  PAOII_STATUS_NULL_POINTER = 1,
  /**
   * A parameter lies outside its domain.
   */
  PAOII_STATUS_INVALID_PARAMS = 2,
  /**
   * The solver or the PAoII recursion failed.
   */
  PAOII_STATUS_NUMERIC = 3,
  /**
   * The requested percentile lies beyond the certified PMF mass.
   */
  PAOII_STATUS_QUANTILE_OUT_OF_RANGE = 4,
  /**
   * The output buffer is shorter than the result.
   */
  PAOII_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * An internal panic was caught at the boundary.
   */
  PAOII_STATUS_PANIC = 6,
} PaoiiStatus;

/**
 * Solved chain for one configuration.
 */
typedef struct PaoiiModel PaoiiModel;

/**
 * System configuration. Probabilities are per slot.
 */
typedef struct PaoiiParams {
  uint32_t n_sensors;
  double lambda;
  double alpha;
  double beta;
  double eps;
  double psi;
  /**
   * Joules per transmitting slot.
   */
  double energy_per_slot;
  /**
   * Seconds per slot.
   */
  double slot_duration;
} PaoiiParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *paoii_version(void);

/**
 * Default configuration: 20 sensors, λ = 0.01, α = 0.9, β = 0.1,
 * ε = ψ = 0.1, 1 mJ per transmitting slot, 50 ms slots.
 */
struct PaoiiParams paoii_params_default(void);

/**
 * Validates `params`, builds the chain and solves for its stationary law.
 * On success `*out` receives a handle the caller must free.
 *
 * # Safety
 * `params` must point to a valid [`PaoiiParams`] and `out` to writable
 * storage for one pointer.
 */
enum PaoiiStatus paoii_model_new(const struct PaoiiParams *params, struct PaoiiModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from [`paoii_model_new`] that has not
 * been freed.
 */
void paoii_model_free(struct PaoiiModel *model);

/**
 * Copies the parameters the model was solved for.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PaoiiStatus paoii_model_params(const struct PaoiiModel *model, struct PaoiiParams *out);

/**
 * Number of aggregate chain states.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PaoiiStatus paoii_model_state_count(const struct PaoiiModel *model, size_t *out);

/**
 * Fresh packets delivered per slot.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PaoiiStatus paoii_model_goodput(const struct PaoiiModel *model, double *out);

/**
 * Mean power per node in watts.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PaoiiStatus paoii_model_power(const struct PaoiiModel *model, double *out);

/**
 * PAoII PMF: `buf[t - 1] = P(θ = t)`, stopping once the remaining mass is at
 * most `tail_tol` or after `t_max` slots.
 *
 * `*written` receives the PMF length. Pass a null `buf` to query it. If
 * `buf_len` is too short nothing is copied and
 * [`PaoiiStatus::BufferTooSmall`] is returned. `tail` may be null;
 * otherwise it receives the mass beyond the last slot.
 *
 * # Safety
 * `model` must be a live handle, `written` writable, `buf` null or valid
 * for `buf_len` writes, `tail` null or writable.
 */
enum PaoiiStatus paoii_model_pmf(const struct PaoiiModel *model,
                                 size_t t_max,
                                 double tail_tol,
                                 double *buf,
                                 size_t buf_len,
                                 size_t *written,
                                 double *tail);

/**
 * Smallest `t` with `P(θ ≤ t) ≥ q`, in slots.
 *
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum PaoiiStatus paoii_model_quantile(const struct PaoiiModel *model,
                                      double q,
                                      size_t t_max,
                                      double tail_tol,
                                      uint64_t *out);

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating to `len` bytes. Returns the size needed
 * for the full message including the terminator, or 0 if there is none.
 *
 * # Safety
 * `buf` must be null or valid for `len` writes.
 */
size_t paoii_last_error_message(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PAOII_H */
