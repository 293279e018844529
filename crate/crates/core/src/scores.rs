//! Per-query min-max normalization of teacher scores and quantile anchors
//! over the normalized negative scores.
//!
//! Normalization runs over the full candidate set (positive included), so
//! exactly one value hits 0 and one hits 1 unless the pool is degenerate.
//! Anchors are computed over the negatives only, because sampling decisions
//! are made only over the negatives.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CandidatePool;
use crate::error::{Error, Result};
use crate::io;

/// A negative candidate with both raw and normalized teacher scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedEntry {
    pub doc_id: String,
    #[serde(rename = "score")]
    pub raw_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_rank: Option<u32>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPositive {
    pub doc_id: String,
    #[serde(rename = "score")]
    pub raw_score: f64,
    pub norm: f64,
}

/// A candidate pool after query-level min-max normalization.
///
/// `negatives` stays aligned 1:1 with the source pool's negative order.
/// Degenerate pools (zero raw score range) carry all-zero norms and the
/// `degenerate` flag; downstream dataset construction skips them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedPool {
    pub query_id: String,
    pub positive: NormalizedPositive,
    pub negatives: Vec<NormalizedEntry>,
    pub raw_min: f64,
    pub raw_max: f64,
    pub degenerate: bool,
}

impl NormalizedPool {
    pub fn pool_size(&self) -> usize {
        self.negatives.len()
    }

    pub fn negative_norms(&self) -> Vec<f64> {
        self.negatives.iter().map(|n| n.norm).collect()
    }
}

/// Min-max normalize one pool over the full set including the positive:
/// `norm = (raw - min) / (max - min)`. A zero range marks the pool
/// degenerate with all norms 0.
pub fn minmax_normalize(pool: &CandidatePool) -> Result<NormalizedPool> {
    if pool.negatives.is_empty() {
        return Err(Error::EmptyPool {
            query_id: pool.query_id.clone(),
        });
    }
    let mut raw_min = pool.positive.raw_score;
    let mut raw_max = pool.positive.raw_score;
    for entry in &pool.negatives {
        raw_min = raw_min.min(entry.raw_score);
        raw_max = raw_max.max(entry.raw_score);
    }

    let degenerate = raw_max == raw_min;
    let scale = if degenerate { 0.0 } else { raw_max - raw_min };
    let normalize = |raw: f64| if degenerate { 0.0 } else { (raw - raw_min) / scale };

    Ok(NormalizedPool {
        query_id: pool.query_id.clone(),
        positive: NormalizedPositive {
            doc_id: pool.positive.doc_id.clone(),
            raw_score: pool.positive.raw_score,
            norm: normalize(pool.positive.raw_score),
        },
        negatives: pool
            .negatives
            .iter()
            .map(|entry| NormalizedEntry {
                doc_id: entry.doc_id.clone(),
                raw_score: entry.raw_score,
                retriever_rank: entry.retriever_rank,
                norm: normalize(entry.raw_score),
            })
            .collect(),
        raw_min,
        raw_max,
        degenerate,
    })
}

/// Linear-interpolation quantile over order statistics (the "type 7"
/// convention): `h = p * (n - 1)`, interpolate between the two bracketing
/// sorted values. `p = 0` yields the minimum, `p = 1` the maximum.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability { p });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(quantile_sorted(&sorted, p))
}

/// Quantile over already-sorted values; shared by [`anchors`] to avoid
/// re-sorting per anchor.
pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= n {
        sorted[lo.min(n - 1)]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// One quantile anchor: cumulative probability `p = (j - 1) / (k - 1)` for
/// `j` in `1..=k`, and `tau` the p-quantile of the values.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileAnchor {
    pub j: usize,
    pub p: f64,
    pub tau: f64,
}

/// Compute `k` evenly spaced quantile anchors. `k = 1` is rejected because
/// the anchor spacing divides by `k - 1`.
pub fn anchors(values: &[f64], k: usize) -> Result<Vec<QuantileAnchor>> {
    if k < 2 {
        return Err(Error::KTooSmall { k });
    }
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok((1..=k)
        .map(|j| {
            let p = (j - 1) as f64 / (k - 1) as f64;
            QuantileAnchor {
                j,
                p,
                tau: quantile_sorted(&sorted, p),
            }
        })
        .collect())
}

// ── Persistence ─────────────────────────────────────────────────────────

/// Write normalized pools in the pools.jsonl layout extended with a `norm`
/// field per entry.
pub fn write_normalized_pools(path: &Path, pools: &[NormalizedPool]) -> Result<()> {
    io::write_jsonl(path, pools)
}

pub fn read_normalized_pools(path: &Path) -> Result<Vec<NormalizedPool>> {
    let rows: Vec<(usize, NormalizedPool)> = io::read_jsonl(path)?;
    Ok(rows.into_iter().map(|(_, pool)| pool).collect())
}
