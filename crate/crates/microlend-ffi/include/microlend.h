/* C interface to the microlend engine. */

#ifndef MICROLEND_H
#define MICROLEND_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum MlStatus {
  MlStatus_Ok = 0,
  /**
   * A null pointer or malformed argument.
   */
  MlStatus_InvalidArgument = 1,
  /**
   * Bad configuration (unknown pool spec, invalid parameter).
   */
  MlStatus_Config = 2,
  /**
   * I/O failure.
   */
  MlStatus_Io = 3,
  /**
   * A contract violation inside the engine.
   */
  MlStatus_Contract = 4,
} MlStatus;

/**
 * Link function selector for the C surface.
 */
typedef enum MlLink {
  /**
   * `L(q) = 1 - exp(-q)`
   */
  MlLink_CaseA = 0,
  /**
   * `L(q) = 2 exp(q) / (1 + exp(q)) - 1`
   */
  MlLink_CaseB = 1,
} MlLink;

/**
 * Opaque applicant pool handle.
 */
typedef struct MlPool MlPool;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the calling thread's most recent error, or null when
 * none occurred. The pointer stays valid until the thread's next failing
 * call into this library.
 */
const char *ml_last_error(void);

/**
 * Library version as a static string.
 */
const char *ml_version(void);

/**
 * Build an applicant pool from a registry spec name (`type1`..`type30`,
 * `group_basic`, `group_advanced_type1`..`18`, `csv:<path>`).
 *
 * On success writes a pool handle to `out_pool` and returns `Ok`; the
 * handle must be released with [`ml_pool_free`].
 *
 * # Safety
 * `spec_name` must be a valid NUL-terminated string and `out_pool` a valid
 * pointer.
 */
enum MlStatus ml_pool_build(const char *spec_name,
                            size_t size,
                            uint64_t seed,
                            struct MlPool **out_pool);

/**
 * Release a pool handle. Null is a no-op.
 *
 * # Safety
 * `pool` must be null or a pointer previously returned by
 * [`ml_pool_build`] that has not been freed yet.
 */
void ml_pool_free(struct MlPool *pool);

/**
 * Number of samples in the pool; 0 for a null handle.
 *
 * # Safety
 * `pool` must be null or a live pool handle.
 */
size_t ml_pool_len(const struct MlPool *pool);

/**
 * Feature dimension of the pool; 0 for a null handle or empty pool.
 *
 * # Safety
 * `pool` must be null or a live pool handle.
 */
size_t ml_pool_feature_dim(const struct MlPool *pool);

/**
 * Evaluate the approval probability of one applicant.
 *
 * `params` holds `2n` values (`phi` then `eps`); `features` holds `n`
 * values where NaN marks a missing entry. The probability is written to
 * `out_prob`.
 *
 * # Safety
 * `params` must point to `2n` readable doubles, `features` to `n` readable
 * doubles, and `out_prob` to a writable double.
 */
enum MlStatus ml_policy_approval_prob(enum MlLink link,
                                      const double *params,
                                      const double *features,
                                      size_t n,
                                      double *out_prob);

/**
 * Run the learning loop on a pool and write the final `2n` parameters to
 * `out_params`.
 *
 * A non-positive `constant_step` selects the default schedule. Multi-start
 * runs with its default settings when `multi_start` is nonzero, otherwise a
 * single candidate is used.
 *
 * # Safety
 * `pool` must be a live pool handle and `out_params` must point to `2n`
 * writable doubles, where `n` is the pool's feature dimension.
 */
enum MlStatus ml_learn(const struct MlPool *pool,
                       enum MlLink link,
                       uint32_t periods,
                       size_t batch_size,
                       double constant_step,
                       int32_t multi_start,
                       uint64_t seed,
                       double interest_rate,
                       double subsidy,
                       double *out_params);

/**
 * Execute a scenario config file end to end, writing result CSVs to
 * `out_dir`. `profile` is `"quick"` or `"paper"`; `seed_override` replaces
 * the config seed when nonnegative.
 *
 * # Safety
 * `config_path`, `out_dir`, and `profile` must be valid NUL-terminated
 * strings.
 */
enum MlStatus ml_run_scenario_file(const char *config_path,
                                   const char *out_dir,
                                   const char *profile,
                                   int64_t seed_override);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MICROLEND_H */
