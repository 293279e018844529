//! C ABI over the negative-sampling and distillation-loss primitives.
//!
//! The surface follows the usual handle-and-status-code shape: fallible
//! calls return a [`KdStatus`], results come back through out-pointers, and
//! pools live behind the opaque [`KdPool`] handle. On any non-`OK` status a
//! human-readable message is stored per thread and can be read back with
//! [`kd_last_error`].
//!
//! The generated header lands in `include/kd_sampler.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use kd_sampler::corpus::{CandidatePool, PoolEntry, PositiveEntry};
use kd_sampler::diversity::diversity_stats;
use kd_sampler::losses::{infonce, kl_listwise, margin_mse, LossResult, ScoredList};
use kd_sampler::sampling::{sample, Strategy, StrategyTag};
use kd_sampler::scores::{minmax_normalize, NormalizedPool};
use kd_sampler::Error;

/// Result code returned by every fallible call.
///
/// Anything other than `KD_STATUS_OK` leaves a message readable via
/// `kd_last_error` on the calling thread.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument violated the documented contract.
    InvalidArgument = 2,
    /// The library panicked; treat the handle state as unspecified.
    Internal = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let owned = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::default());
}

fn fail(status: KdStatus, message: &str) -> KdStatus {
    set_last_error(message);
    status
}

fn fail_with(err: Error) -> KdStatus {
    fail(KdStatus::InvalidArgument, &err.to_string())
}

/// Runs the body under `catch_unwind` so a panic surfaces as
/// `KD_STATUS_INTERNAL` instead of crossing the ABI boundary.
fn guarded<F: FnOnce() -> KdStatus>(body: F) -> KdStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == KdStatus::Ok {
                clear_last_error();
            }
            status
        }
        Err(_) => fail(KdStatus::Internal, "internal panic"),
    }
}

/// Message for the most recent failing call on this thread.
///
/// Returns an empty string after a successful call. The pointer stays valid
/// until the next library call on the same thread; copy the string out if it
/// must outlive that.
#[no_mangle]
pub extern "C" fn kd_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// A candidate pool after per-query min-max normalization, ready for
/// sampling. Create with `kd_pool_create`, release with `kd_pool_free`.
pub struct KdPool {
    normalized: NormalizedPool,
}

/// Synthetic doc id that sorts lexicographically in input order, so the
/// library's doc-id tie-breaks reduce to "earlier input index wins".
fn index_id(idx: usize) -> String {
    format!("{idx:020}")
}

fn index_of(doc_id: &str) -> usize {
    doc_id.parse().expect("pool doc ids are synthesized indices")
}

/// Builds a pool from one query's teacher scores and normalizes it.
///
/// `ranks` may be null (no negative carries a retriever rank); otherwise a
/// non-negative entry is that negative's retriever rank and a negative
/// entry marks it unranked. All scores must be finite. On success `*out`
/// owns the new handle.
///
/// # Safety
/// `raw_scores` (and `ranks` when non-null) must point to `n_negatives`
/// readable elements, and `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_create(
    raw_scores: *const f64,
    ranks: *const i64,
    n_negatives: usize,
    positive_score: f64,
    out: *mut *mut KdPool,
) -> KdStatus {
    guarded(|| {
        if out.is_null() {
            return fail(KdStatus::NullPointer, "out is null");
        }
        if raw_scores.is_null() {
            return fail(KdStatus::NullPointer, "raw_scores is null");
        }
        if n_negatives == 0 {
            return fail(KdStatus::InvalidArgument, "pool needs at least one negative");
        }
        if !positive_score.is_finite() {
            return fail(KdStatus::InvalidArgument, "positive score must be finite");
        }
        let scores = std::slice::from_raw_parts(raw_scores, n_negatives);
        if scores.iter().any(|s| !s.is_finite()) {
            return fail(KdStatus::InvalidArgument, "negative scores must be finite");
        }
        let ranks = if ranks.is_null() {
            vec![None; n_negatives]
        } else {
            let raw = std::slice::from_raw_parts(ranks, n_negatives);
            let mut converted = Vec::with_capacity(n_negatives);
            for &r in raw {
                if r < 0 {
                    converted.push(None);
                } else if let Ok(rank) = u32::try_from(r) {
                    converted.push(Some(rank));
                } else {
                    return fail(KdStatus::InvalidArgument, "retriever rank exceeds u32");
                }
            }
            converted
        };
        let pool = CandidatePool {
            query_id: "q".into(),
            positive: PositiveEntry {
                doc_id: "positive".into(),
                raw_score: positive_score,
            },
            negatives: scores
                .iter()
                .zip(ranks)
                .enumerate()
                .map(|(idx, (&raw_score, retriever_rank))| PoolEntry {
                    doc_id: index_id(idx),
                    raw_score,
                    retriever_rank,
                })
                .collect(),
        };
        match minmax_normalize(&pool) {
            Ok(normalized) => {
                *out = Box::into_raw(Box::new(KdPool { normalized }));
                KdStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

/// Releases a pool handle. Null is a no-op.
///
/// # Safety
/// `pool` must be null or a handle from `kd_pool_create` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_free(pool: *mut KdPool) {
    if !pool.is_null() {
        drop(Box::from_raw(pool));
    }
}

/// Number of negatives in the pool.
///
/// # Safety
/// `pool` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_size(pool: *const KdPool, out: *mut usize) -> KdStatus {
    guarded(|| {
        if pool.is_null() || out.is_null() {
            return fail(KdStatus::NullPointer, "pool and out must be non-null");
        }
        *out = (*pool).normalized.pool_size();
        KdStatus::Ok
    })
}

/// Whether the pool's raw scores were all equal, which makes every
/// normalized score 0 and the pool unusable for sampling.
///
/// # Safety
/// `pool` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_is_degenerate(pool: *const KdPool, out: *mut bool) -> KdStatus {
    guarded(|| {
        if pool.is_null() || out.is_null() {
            return fail(KdStatus::NullPointer, "pool and out must be non-null");
        }
        *out = (*pool).normalized.degenerate;
        KdStatus::Ok
    })
}

/// Normalized score of the positive.
///
/// # Safety
/// `pool` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_positive_norm(pool: *const KdPool, out: *mut f64) -> KdStatus {
    guarded(|| {
        if pool.is_null() || out.is_null() {
            return fail(KdStatus::NullPointer, "pool and out must be non-null");
        }
        *out = (*pool).normalized.positive.norm;
        KdStatus::Ok
    })
}

/// Copies the normalized negative scores, in input order, into `out`.
/// `len` must equal the pool size.
///
/// # Safety
/// `pool` must be a live handle and `out` must point to `len` writable
/// elements.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_norms(
    pool: *const KdPool,
    out: *mut f64,
    len: usize,
) -> KdStatus {
    guarded(|| {
        if pool.is_null() || out.is_null() {
            return fail(KdStatus::NullPointer, "pool and out must be non-null");
        }
        let norms = (*pool).normalized.negative_norms();
        if norms.len() != len {
            return fail(
                KdStatus::InvalidArgument,
                &format!("len is {len} but the pool has {} negatives", norms.len()),
            );
        }
        std::ptr::copy_nonoverlapping(norms.as_ptr(), out, len);
        KdStatus::Ok
    })
}

/// Selects `k` negatives with the named strategy.
///
/// `strategy` is one of `retriever_top`, `reranker_top`, `low`, `mid`,
/// `random`, `stratified`; `seed` is read only by `random`. On success
/// `out_indices` (length `k`, required) receives the chosen negatives'
/// input positions in selection order, and `out_norms` (length `k`, may be
/// null) their normalized scores.
///
/// # Safety
/// `pool` must be a live handle, `strategy` a NUL-terminated string, and
/// `out_indices` (and `out_norms` when non-null) must point to `k` writable
/// elements.
#[no_mangle]
pub unsafe extern "C" fn kd_pool_sample(
    pool: *const KdPool,
    strategy: *const c_char,
    k: usize,
    seed: u64,
    out_indices: *mut usize,
    out_norms: *mut f64,
) -> KdStatus {
    guarded(|| {
        if pool.is_null() || strategy.is_null() || out_indices.is_null() {
            return fail(
                KdStatus::NullPointer,
                "pool, strategy, and out_indices must be non-null",
            );
        }
        let Ok(name) = CStr::from_ptr(strategy).to_str() else {
            return fail(KdStatus::InvalidArgument, "strategy is not valid UTF-8");
        };
        let tag: StrategyTag = match name.parse() {
            Ok(tag) => tag,
            Err(err) => return fail_with(err),
        };
        let strategy = Strategy::from_tag(tag, Some(seed)).expect("seed is always supplied");
        let normalized = &(*pool).normalized;
        if normalized.degenerate {
            return fail(
                KdStatus::InvalidArgument,
                "pool is degenerate; sampling is undefined",
            );
        }
        let picked = match sample(normalized, &strategy, k) {
            Ok(picked) => picked,
            Err(err) => return fail_with(err),
        };
        for (slot, chosen) in (0..k).zip(&picked.selected) {
            *out_indices.add(slot) = index_of(&chosen.doc_id);
            if !out_norms.is_null() {
                *out_norms.add(slot) = chosen.norm;
            }
        }
        KdStatus::Ok
    })
}

unsafe fn write_loss(
    result: LossResult,
    len: usize,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> KdStatus {
    if !out_value.is_null() {
        *out_value = result.value;
    }
    if !out_grad.is_null() {
        debug_assert_eq!(result.grad_student.len(), len);
        std::ptr::copy_nonoverlapping(result.grad_student.as_ptr(), out_grad, len);
    }
    KdStatus::Ok
}

unsafe fn scored_list(
    student: *const f64,
    teacher: *const f64,
    len: usize,
    temperature: f64,
) -> Result<ScoredList, KdStatus> {
    if student.is_null() || teacher.is_null() {
        return Err(fail(
            KdStatus::NullPointer,
            "student and teacher must be non-null",
        ));
    }
    let student = std::slice::from_raw_parts(student, len).to_vec();
    let teacher = std::slice::from_raw_parts(teacher, len).to_vec();
    ScoredList::new(student, teacher, temperature).map_err(fail_with)
}

/// Listwise distillation loss: KL between the teacher and student softmax
/// distributions at the given temperature.
///
/// `student` and `teacher` hold `len >= 2` scores, positive first; teacher
/// scores must already be normalized into [0, 1]. `out_value` (may be null)
/// receives the loss, `out_grad` (length `len`, may be null) the gradient
/// with respect to each student score.
///
/// # Safety
/// `student` and `teacher` must point to `len` readable elements; `out_grad`,
/// when non-null, to `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn kd_kl_listwise(
    student: *const f64,
    teacher: *const f64,
    len: usize,
    temperature: f64,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> KdStatus {
    guarded(|| {
        let list = match scored_list(student, teacher, len, temperature) {
            Ok(list) => list,
            Err(status) => return status,
        };
        match kl_listwise(&list) {
            Ok(result) => write_loss(result, len, out_value, out_grad),
            Err(err) => fail_with(err),
        }
    })
}

/// Margin distillation loss: mean squared difference between student and
/// teacher positive-minus-negative margins. Same argument contract as
/// `kd_kl_listwise`, minus the temperature.
///
/// # Safety
/// `student` and `teacher` must point to `len` readable elements; `out_grad`,
/// when non-null, to `len` writable ones.
#[no_mangle]
pub unsafe extern "C" fn kd_margin_mse(
    student: *const f64,
    teacher: *const f64,
    len: usize,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> KdStatus {
    guarded(|| {
        let list = match scored_list(student, teacher, len, 1.0) {
            Ok(list) => list,
            Err(status) => return status,
        };
        match margin_mse(&list) {
            Ok(result) => write_loss(result, len, out_value, out_grad),
            Err(err) => fail_with(err),
        }
    })
}

/// Temperature-scaled contrastive loss treating the positive as the target
/// class among the negatives.
///
/// `sims_neg` holds `n_neg >= 1` negative similarities. `out_value` (may be
/// null) receives the loss, `out_grad` (length `n_neg + 1`, may be null) the
/// gradient ordered positive first.
///
/// # Safety
/// `sims_neg` must point to `n_neg` readable elements; `out_grad`, when
/// non-null, to `n_neg + 1` writable ones.
#[no_mangle]
pub unsafe extern "C" fn kd_infonce(
    sim_pos: f64,
    sims_neg: *const f64,
    n_neg: usize,
    temperature: f64,
    out_value: *mut f64,
    out_grad: *mut f64,
) -> KdStatus {
    guarded(|| {
        if sims_neg.is_null() {
            return fail(KdStatus::NullPointer, "sims_neg is null");
        }
        let negatives = std::slice::from_raw_parts(sims_neg, n_neg);
        match infonce(sim_pos, negatives, temperature) {
            Ok(result) => write_loss(result, n_neg + 1, out_value, out_grad),
            Err(err) => fail_with(err),
        }
    })
}

/// Spread statistics of a set of normalized scores: coverage (max minus
/// min), Shannon entropy in nats over eight equal-width bins spanning the
/// sample's own range, and population standard deviation. Each out-pointer
/// may be null.
///
/// # Safety
/// `values` must point to `len` readable elements; non-null out-pointers
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn kd_diversity_stats(
    values: *const f64,
    len: usize,
    out_coverage: *mut f64,
    out_entropy: *mut f64,
    out_std: *mut f64,
) -> KdStatus {
    guarded(|| {
        if values.is_null() {
            return fail(KdStatus::NullPointer, "values is null");
        }
        let values = std::slice::from_raw_parts(values, len);
        match diversity_stats(values) {
            Ok(stats) => {
                if !out_coverage.is_null() {
                    *out_coverage = stats.coverage;
                }
                if !out_entropy.is_null() {
                    *out_entropy = stats.entropy;
                }
                if !out_std.is_null() {
                    *out_std = stats.std;
                }
                KdStatus::Ok
            }
            Err(err) => fail_with(err),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn last_error() -> String {
        unsafe { CStr::from_ptr(kd_last_error()) }
            .to_str()
            .unwrap()
            .to_owned()
    }

    fn make_pool(scores: &[f64], ranks: Option<&[i64]>, positive: f64) -> *mut KdPool {
        let mut pool = ptr::null_mut();
        let ranks_ptr = ranks.map_or(ptr::null(), |r| r.as_ptr());
        let status = unsafe {
            kd_pool_create(scores.as_ptr(), ranks_ptr, scores.len(), positive, &mut pool)
        };
        assert_eq!(status, KdStatus::Ok, "{}", last_error());
        pool
    }

    fn sample_indices(pool: *const KdPool, strategy: &str, k: usize, seed: u64) -> Vec<usize> {
        let strategy = CString::new(strategy).unwrap();
        let mut indices = vec![0usize; k];
        let mut norms = vec![0.0f64; k];
        let status = unsafe {
            kd_pool_sample(
                pool,
                strategy.as_ptr(),
                k,
                seed,
                indices.as_mut_ptr(),
                norms.as_mut_ptr(),
            )
        };
        assert_eq!(status, KdStatus::Ok, "{}", last_error());
        indices
    }

    #[test]
    fn pool_reports_size_and_norms() {
        let pool = make_pool(&[3.0, 2.0, 1.0, 0.0], None, 4.0);
        unsafe {
            let mut size = 0usize;
            assert_eq!(kd_pool_size(pool, &mut size), KdStatus::Ok);
            assert_eq!(size, 4);

            let mut degenerate = true;
            assert_eq!(kd_pool_is_degenerate(pool, &mut degenerate), KdStatus::Ok);
            assert!(!degenerate);

            let mut positive = 0.0;
            assert_eq!(kd_pool_positive_norm(pool, &mut positive), KdStatus::Ok);
            assert_eq!(positive, 1.0);

            let mut norms = vec![0.0; 4];
            assert_eq!(kd_pool_norms(pool, norms.as_mut_ptr(), 4), KdStatus::Ok);
            assert_eq!(norms, vec![0.75, 0.5, 0.25, 0.0]);

            kd_pool_free(pool);
        }
    }

    #[test]
    fn norms_length_mismatch_is_rejected() {
        let pool = make_pool(&[1.0, 0.0], None, 2.0);
        unsafe {
            let mut norms = vec![0.0; 3];
            assert_eq!(
                kd_pool_norms(pool, norms.as_mut_ptr(), 3),
                KdStatus::InvalidArgument
            );
            assert!(last_error().contains("2 negatives"));
            kd_pool_free(pool);
        }
    }

    #[test]
    fn stratified_sampling_picks_quantile_anchored_negatives() {
        // Negative norms come out as [0, 0.25, 0.5, 0.75, 1]; with k = 3 the
        // anchors sit at 0, 0.5, and 1.
        let pool = make_pool(&[0.0, 1.0, 2.0, 3.0, 4.0], None, 4.0);
        let strategy = CString::new("stratified").unwrap();
        let mut indices = vec![0usize; 3];
        let mut norms = vec![0.0f64; 3];
        let status = unsafe {
            kd_pool_sample(
                pool,
                strategy.as_ptr(),
                3,
                0,
                indices.as_mut_ptr(),
                norms.as_mut_ptr(),
            )
        };
        assert_eq!(status, KdStatus::Ok);
        assert_eq!(indices, vec![0, 2, 4]);
        assert_eq!(norms, vec![0.0, 0.5, 1.0]);
        unsafe { kd_pool_free(pool) };
    }

    #[test]
    fn retriever_top_follows_ranks() {
        let ranks = [3i64, 1, -1, 2];
        let pool = make_pool(&[0.1, 0.2, 0.9, 0.4], Some(&ranks), 1.0);
        assert_eq!(sample_indices(pool, "retriever_top", 3, 0), vec![1, 3, 0]);
        unsafe { kd_pool_free(pool) };
    }

    #[test]
    fn random_sampling_is_seed_deterministic() {
        let scores: Vec<f64> = (0..20).map(f64::from).collect();
        let pool = make_pool(&scores, None, 20.0);
        let first = sample_indices(pool, "random", 5, 99);
        let second = sample_indices(pool, "random", 5, 99);
        let other = sample_indices(pool, "random", 5, 100);
        assert_eq!(first, second);
        assert_ne!(first, other);
        unsafe { kd_pool_free(pool) };
    }

    #[test]
    fn degenerate_pool_refuses_to_sample() {
        let pool = make_pool(&[2.0, 2.0], None, 2.0);
        unsafe {
            let mut degenerate = false;
            assert_eq!(kd_pool_is_degenerate(pool, &mut degenerate), KdStatus::Ok);
            assert!(degenerate);

            let strategy = CString::new("low").unwrap();
            let mut idx = vec![0usize; 1];
            let status = kd_pool_sample(
                pool,
                strategy.as_ptr(),
                1,
                0,
                idx.as_mut_ptr(),
                ptr::null_mut(),
            );
            assert_eq!(status, KdStatus::InvalidArgument);
            assert!(last_error().contains("degenerate"));
            kd_pool_free(pool);
        }
    }

    #[test]
    fn unknown_strategy_and_oversized_k_are_rejected() {
        let pool = make_pool(&[1.0, 0.0], None, 2.0);
        unsafe {
            let bogus = CString::new("bogus").unwrap();
            let mut idx = vec![0usize; 1];
            assert_eq!(
                kd_pool_sample(pool, bogus.as_ptr(), 1, 0, idx.as_mut_ptr(), ptr::null_mut()),
                KdStatus::InvalidArgument
            );
            assert!(last_error().contains("bogus"));

            let low = CString::new("low").unwrap();
            let mut idx = vec![0usize; 3];
            assert_eq!(
                kd_pool_sample(pool, low.as_ptr(), 3, 0, idx.as_mut_ptr(), ptr::null_mut()),
                KdStatus::InvalidArgument
            );
            kd_pool_free(pool);
        }
    }

    #[test]
    fn null_pointers_are_reported() {
        unsafe {
            let mut pool = ptr::null_mut();
            assert_eq!(
                kd_pool_create(ptr::null(), ptr::null(), 2, 1.0, &mut pool),
                KdStatus::NullPointer
            );
            assert!(last_error().contains("null"));

            let mut size = 0usize;
            assert_eq!(kd_pool_size(ptr::null(), &mut size), KdStatus::NullPointer);
        }
    }

    #[test]
    fn success_clears_the_error_message() {
        let pool = make_pool(&[1.0, 0.0], None, 2.0);
        unsafe {
            let mut size = 0usize;
            assert_eq!(kd_pool_size(ptr::null(), &mut size), KdStatus::NullPointer);
            assert!(!last_error().is_empty());
            assert_eq!(kd_pool_size(pool, &mut size), KdStatus::Ok);
            assert!(last_error().is_empty());
            kd_pool_free(pool);
        }
    }

    #[test]
    fn kl_matches_the_library_value() {
        let student = [1.0f64, 0.0];
        let teacher = [1.0f64, 0.0];
        let mut value = 0.0;
        let mut grad = vec![0.0; 2];
        let status = unsafe {
            kd_kl_listwise(
                student.as_ptr(),
                teacher.as_ptr(),
                2,
                1.0,
                &mut value,
                grad.as_mut_ptr(),
            )
        };
        assert_eq!(status, KdStatus::Ok);
        assert!(value.abs() < 1e-15);
        assert!(grad.iter().all(|g| g.abs() < 1e-15));

        let student = [0.0f64, 0.0];
        let expected = 2.0f64.ln() + 1.0f64.exp() / (1.0 + 1.0f64.exp()) - (1.0 + 1.0f64.exp()).ln();
        let status = unsafe {
            kd_kl_listwise(
                student.as_ptr(),
                teacher.as_ptr(),
                2,
                1.0,
                &mut value,
                grad.as_mut_ptr(),
            )
        };
        assert_eq!(status, KdStatus::Ok);
        assert!((value - expected).abs() < 1e-12);
        assert!((grad[0] + grad[1]).abs() < 1e-12);
    }

    #[test]
    fn margin_mse_is_zero_when_margins_agree() {
        // Teacher margins are 0.5 and 0.25; the student list reproduces them
        // up to a constant shift, which the loss ignores.
        let teacher = [0.75f64, 0.25, 0.5];
        let student = [4.0f64, 3.5, 3.75];
        let mut value = f64::NAN;
        let status = unsafe {
            kd_margin_mse(
                student.as_ptr(),
                teacher.as_ptr(),
                3,
                &mut value,
                ptr::null_mut(),
            )
        };
        assert_eq!(status, KdStatus::Ok, "{}", last_error());
        assert!(value.abs() < 1e-15);
    }

    #[test]
    fn infonce_matches_closed_form() {
        let negatives = [0.0f64];
        let mut value = 0.0;
        let mut grad = vec![0.0; 2];
        let status = unsafe {
            kd_infonce(1.0, negatives.as_ptr(), 1, 1.0, &mut value, grad.as_mut_ptr())
        };
        assert_eq!(status, KdStatus::Ok);
        assert!((value - (1.0 + (-1.0f64).exp()).ln()).abs() < 1e-12);
        assert!((grad[0] + grad[1]).abs() < 1e-12);
    }

    #[test]
    fn invalid_temperature_is_flagged() {
        let negatives = [0.0f64];
        let status = unsafe {
            kd_infonce(
                1.0,
                negatives.as_ptr(),
                1,
                0.0,
                ptr::null_mut(),
                ptr::null_mut(),
            )
        };
        assert_eq!(status, KdStatus::InvalidArgument);
        assert!(last_error().contains("temperature"));
    }

    #[test]
    fn diversity_stats_match_the_two_cluster_case() {
        let values = [0.0f64, 0.0, 1.0, 1.0];
        let mut coverage = 0.0;
        let mut entropy = 0.0;
        let mut std = 0.0;
        let status = unsafe {
            kd_diversity_stats(
                values.as_ptr(),
                values.len(),
                &mut coverage,
                &mut entropy,
                &mut std,
            )
        };
        assert_eq!(status, KdStatus::Ok);
        assert_eq!(coverage, 1.0);
        assert!((entropy - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(std, 0.5);
    }

    #[test]
    fn version_is_a_valid_string() {
        let version = unsafe { CStr::from_ptr(kd_version()) }.to_str().unwrap();
        assert_eq!(version, env!("CARGO_PKG_VERSION"));
    }
}
