#ifndef KD_SAMPLER_H
#define KD_SAMPLER_H

/* Generated by cbindgen from the kd-sampler-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code returned by every fallible call.
 *
 * Anything other than `KD_STATUS_OK` leaves a message readable via
 * `kd_last_error` on the calling thread.
 */
typedef enum {
  /**
   * The call succeeded.
   */
  KD_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  KD_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated the documented contract.
   */
  KD_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The library panicked; treat the handle state as unspecified.
   */
  KD_STATUS_INTERNAL = 3,
} KdStatus;

/**
 * A candidate pool after per-query min-max normalization, ready for
 * sampling. Create with `kd_pool_create`, release with `kd_pool_free`.
 */
typedef struct KdPool KdPool;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failing call on this thread.
 *
 * Returns an empty string after a successful call. The pointer stays valid
 * until the next library call on the same thread; copy the string out if it
 * must outlive that.
 */
const char *kd_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *kd_version(void);

/**
 * Builds a pool from one query's teacher scores and normalizes it.
 *
 * `ranks` may be null (no negative carries a retriever rank); otherwise a
 * non-negative entry is that negative's retriever rank and a negative
 * entry marks it unranked. All scores must be finite. On success `*out`
 * owns the new handle.
 *
 * # Safety
 * `raw_scores` (and `ranks` when non-null) must point to `n_negatives`
 * readable elements, and `out` to a writable pointer slot.
 */
KdStatus kd_pool_create(const double *raw_scores,
                        const int64_t *ranks,
                        uintptr_t n_negatives,
                        double positive_score,
                        KdPool **out);

/**
 * Releases a pool handle. Null is a no-op.
 *
 * # Safety
 * `pool` must be null or a handle from `kd_pool_create` not yet freed.
 */
void kd_pool_free(KdPool *pool);

/**
 * Number of negatives in the pool.
 *
 * # Safety
 * `pool` must be a live handle and `out` writable.
 */
KdStatus kd_pool_size(const KdPool *pool, uintptr_t *out);

/**
 * Whether the pool's raw scores were all equal, which makes every
 * normalized score 0 and the pool unusable for sampling.
 *
 * # Safety
 * `pool` must be a live handle and `out` writable.
 */
KdStatus kd_pool_is_degenerate(const KdPool *pool, bool *out);

/**
 * Normalized score of the positive.
 *
 * # Safety
 * `pool` must be a live handle and `out` writable.
 */
KdStatus kd_pool_positive_norm(const KdPool *pool, double *out);

/**
 * Copies the normalized negative scores, in input order, into `out`.
 * `len` must equal the pool size.
 *
 * # Safety
 * `pool` must be a live handle and `out` must point to `len` writable
 * elements.
 */
KdStatus kd_pool_norms(const KdPool *pool, double *out, uintptr_t len);

/**
 * Selects `k` negatives with the named strategy.
 *
 * `strategy` is one of `retriever_top`, `reranker_top`, `low`, `mid`,
 * `random`, `stratified`; `seed` is read only by `random`. On success
 * `out_indices` (length `k`, required) receives the chosen negatives'
 * input positions in selection order, and `out_norms` (length `k`, may be
 * null) their normalized scores.
 *
 * # Safety
 * `pool` must be a live handle, `strategy` a NUL-terminated string, and
 * `out_indices` (and `out_norms` when non-null) must point to `k` writable
 * elements.
 */
KdStatus kd_pool_sample(const KdPool *pool,
                        const char *strategy,
                        uintptr_t k,
                        uint64_t seed,
                        uintptr_t *out_indices,
                        double *out_norms);

/**
 * Listwise distillation loss: KL between the teacher and student softmax
 * distributions at the given temperature.
 *
 * `student` and `teacher` hold `len >= 2` scores, positive first; teacher
 * scores must already be normalized into [0, 1]. `out_value` (may be null)
 * receives the loss, `out_grad` (length `len`, may be null) the gradient
 * with respect to each student score.
 *
 * # Safety
 * `student` and `teacher` must point to `len` readable elements; `out_grad`,
 * when non-null, to `len` writable ones.
 */
KdStatus kd_kl_listwise(const double *student,
                        const double *teacher,
                        uintptr_t len,
                        double temperature,
                        double *out_value,
                        double *out_grad);

/**
 * Margin distillation loss: mean squared difference between student and
 * teacher positive-minus-negative margins. Same argument contract as
 * `kd_kl_listwise`, minus the temperature.
 *
 * # Safety
 * `student` and `teacher` must point to `len` readable elements; `out_grad`,
 * when non-null, to `len` writable ones.
 */
KdStatus kd_margin_mse(const double *student,
                       const double *teacher,
                       uintptr_t len,
                       double *out_value,
                       double *out_grad);

/**
 * Temperature-scaled contrastive loss treating the positive as the target
 * class among the negatives.
 *
 * `sims_neg` holds `n_neg >= 1` negative similarities. `out_value` (may be
 * null) receives the loss, `out_grad` (length `n_neg + 1`, may be null) the
 * gradient ordered positive first.
 *
 * # Safety
 * `sims_neg` must point to `n_neg` readable elements; `out_grad`, when
 * non-null, to `n_neg + 1` writable ones.
 */
KdStatus kd_infonce(double sim_pos,
                    const double *sims_neg,
                    uintptr_t n_neg,
                    double temperature,
                    double *out_value,
                    double *out_grad);

/**
 * Spread statistics of a set of normalized scores: coverage (max minus
 * min), Shannon entropy in nats over eight equal-width bins spanning the
 * sample's own range, and population standard deviation. Each out-pointer
 * may be null.
 *
 * # Safety
 * `values` must point to `len` readable elements; non-null out-pointers
 * must be writable.
 */
KdStatus kd_diversity_stats(const double *values,
                            uintptr_t len,
                            double *out_coverage,
                            double *out_entropy,
                            double *out_std);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KD_SAMPLER_H */
