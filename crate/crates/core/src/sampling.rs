//! The six candidate-selection strategies over a normalized pool.
//!
//! Every strategy is deterministic: `random` is a pure function of
//! (pool, seed), the rest are pure functions of the pool alone. Ties in any
//! score-ordered selection break by retriever rank ascending (rankless
//! entries last), then doc id ascending, so the selected set is invariant
//! under permutation of the pool's negative list.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::rng::{self, SplitMix64};
use crate::scores::{anchors, NormalizedEntry, NormalizedPool};

/// Strategy tag without parameters; used in reports and file output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyTag {
    RetrieverTop,
    RerankerTop,
    Low,
    Mid,
    Random,
    Stratified,
}

impl StrategyTag {
    pub const ALL: [StrategyTag; 6] = [
        StrategyTag::RetrieverTop,
        StrategyTag::RerankerTop,
        StrategyTag::Low,
        StrategyTag::Mid,
        StrategyTag::Random,
        StrategyTag::Stratified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::RetrieverTop => "retriever_top",
            StrategyTag::RerankerTop => "reranker_top",
            StrategyTag::Low => "low",
            StrategyTag::Mid => "mid",
            StrategyTag::Random => "random",
            StrategyTag::Stratified => "stratified",
        }
    }
}

impl std::fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retriever_top" => Ok(StrategyTag::RetrieverTop),
            "reranker_top" => Ok(StrategyTag::RerankerTop),
            "low" => Ok(StrategyTag::Low),
            "mid" => Ok(StrategyTag::Mid),
            "random" => Ok(StrategyTag::Random),
            "stratified" => Ok(StrategyTag::Stratified),
            other => Err(Error::UnknownStrategy { tag: other.into() }),
        }
    }
}

/// A fully specified strategy; `Random` carries its seed so the invariant
/// "seed present exactly when the tag is random" holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    RetrieverTop,
    RerankerTop,
    Low,
    Mid,
    Random { seed: u64 },
    Stratified,
}

impl Strategy {
    /// Build from a tag plus an optional seed. The seed is required for
    /// `random` and ignored otherwise.
    pub fn from_tag(tag: StrategyTag, seed: Option<u64>) -> Result<Strategy> {
        Ok(match tag {
            StrategyTag::RetrieverTop => Strategy::RetrieverTop,
            StrategyTag::RerankerTop => Strategy::RerankerTop,
            StrategyTag::Low => Strategy::Low,
            StrategyTag::Mid => Strategy::Mid,
            StrategyTag::Random => Strategy::Random {
                seed: seed.ok_or(Error::SeedRequired)?,
            },
            StrategyTag::Stratified => Strategy::Stratified,
        })
    }

    pub fn tag(&self) -> StrategyTag {
        match self {
            Strategy::RetrieverTop => StrategyTag::RetrieverTop,
            Strategy::RerankerTop => StrategyTag::RerankerTop,
            Strategy::Low => StrategyTag::Low,
            Strategy::Mid => StrategyTag::Mid,
            Strategy::Random { .. } => StrategyTag::Random,
            Strategy::Stratified => StrategyTag::Stratified,
        }
    }
}

/// One selected negative inside a training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedNegative {
    pub doc_id: String,
    pub norm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_rank: Option<u32>,
}

/// A training triplet: query, positive, and the K selected negatives in
/// strategy order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub query_id: String,
    pub positive_doc_id: String,
    pub positive_norm: f64,
    pub selected: Vec<SelectedNegative>,
}

impl TrainingSample {
    pub fn selected_norms(&self) -> Vec<f64> {
        self.selected.iter().map(|s| s.norm).collect()
    }
}

fn selected(entry: &NormalizedEntry) -> SelectedNegative {
    SelectedNegative {
        doc_id: entry.doc_id.clone(),
        norm: entry.norm,
        retriever_rank: entry.retriever_rank,
    }
}

fn make_sample(pool: &NormalizedPool, picks: Vec<&NormalizedEntry>) -> TrainingSample {
    TrainingSample {
        query_id: pool.query_id.clone(),
        positive_doc_id: pool.positive.doc_id.clone(),
        positive_norm: pool.positive.norm,
        selected: picks.into_iter().map(selected).collect(),
    }
}

/// Tie-break key shared by all score-ordered selections: retriever rank
/// ascending with rankless entries last, then doc id ascending.
fn tie_key(entry: &NormalizedEntry) -> (u8, u32, &str) {
    match entry.retriever_rank {
        Some(rank) => (0, rank, entry.doc_id.as_str()),
        None => (1, 0, entry.doc_id.as_str()),
    }
}

fn by_norm_ascending(a: &NormalizedEntry, b: &NormalizedEntry) -> Ordering {
    a.norm
        .total_cmp(&b.norm)
        .then_with(|| tie_key(a).cmp(&tie_key(b)))
}

fn check_pool_size(pool: &NormalizedPool, k: usize) -> Result<()> {
    if k > pool.pool_size() {
        return Err(Error::PoolTooSmall {
            query_id: pool.query_id.clone(),
            k,
            available: pool.pool_size(),
            kind: "pool",
        });
    }
    Ok(())
}

/// Top K by the retriever's mining order (smallest rank first).
pub fn sample_retriever_top(pool: &NormalizedPool, k: usize) -> Result<TrainingSample> {
    let mut ranked: Vec<&NormalizedEntry> = pool
        .negatives
        .iter()
        .filter(|e| e.retriever_rank.is_some())
        .collect();
    if k > ranked.len() {
        return Err(Error::PoolTooSmall {
            query_id: pool.query_id.clone(),
            k,
            available: ranked.len(),
            kind: "ranked",
        });
    }
    ranked.sort_by(|a, b| tie_key(a).cmp(&tie_key(b)));
    ranked.truncate(k);
    Ok(make_sample(pool, ranked))
}

/// Top K by normalized teacher score, descending.
pub fn sample_reranker_top(pool: &NormalizedPool, k: usize) -> Result<TrainingSample> {
    check_pool_size(pool, k)?;
    let mut entries: Vec<&NormalizedEntry> = pool.negatives.iter().collect();
    entries.sort_by(|a, b| {
        b.norm
            .total_cmp(&a.norm)
            .then_with(|| tie_key(a).cmp(&tie_key(b)))
    });
    entries.truncate(k);
    Ok(make_sample(pool, entries))
}

/// Bottom K by normalized teacher score, ascending.
pub fn sample_low(pool: &NormalizedPool, k: usize) -> Result<TrainingSample> {
    check_pool_size(pool, k)?;
    let mut entries: Vec<&NormalizedEntry> = pool.negatives.iter().collect();
    entries.sort_by(|a, b| by_norm_ascending(a, b));
    entries.truncate(k);
    Ok(make_sample(pool, entries))
}

/// The centered contiguous run of K in score-ascending order: indices
/// `floor((n - k) / 2) ..` of the sorted negatives.
pub fn sample_mid(pool: &NormalizedPool, k: usize) -> Result<TrainingSample> {
    check_pool_size(pool, k)?;
    let mut entries: Vec<&NormalizedEntry> = pool.negatives.iter().collect();
    entries.sort_by(|a, b| by_norm_ascending(a, b));
    let start = (entries.len() - k) / 2;
    Ok(make_sample(pool, entries[start..start + k].to_vec()))
}

/// K distinct negatives uniformly without replacement.
///
/// Candidates are first put in canonical doc-id order, then selected by a
/// partial Fisher-Yates shuffle driven by [`SplitMix64`], so the outcome
/// depends only on (pool contents, seed), not on input order or platform.
pub fn sample_random(pool: &NormalizedPool, k: usize, seed: u64) -> Result<TrainingSample> {
    check_pool_size(pool, k)?;
    let mut entries: Vec<&NormalizedEntry> = pool.negatives.iter().collect();
    entries.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    let mut rng = SplitMix64::new(seed);
    let picks = rng
        .choose_indices(entries.len(), k)
        .into_iter()
        .map(|i| entries[i])
        .collect();
    Ok(make_sample(pool, picks))
}

/// Quantile-stratified selection: place K evenly spaced quantile anchors
/// over the negative norms and greedily pick, per anchor in ascending order,
/// the not-yet-selected candidate with the smallest |norm - tau|. Distance
/// ties break toward the smaller norm, then the smaller doc id.
pub fn sample_stratified(pool: &NormalizedPool, k: usize) -> Result<TrainingSample> {
    if k < 2 {
        return Err(Error::KTooSmall { k });
    }
    check_pool_size(pool, k)?;
    let norms = pool.negative_norms();
    let anchor_list = anchors(&norms, k)?;

    let mut remaining: Vec<&NormalizedEntry> = pool.negatives.iter().collect();
    let mut picks: Vec<&NormalizedEntry> = Vec::with_capacity(k);
    for anchor in &anchor_list {
        let best = remaining
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.norm - anchor.tau)
                    .abs()
                    .total_cmp(&(b.norm - anchor.tau).abs())
                    .then_with(|| a.norm.total_cmp(&b.norm))
                    .then_with(|| a.doc_id.cmp(&b.doc_id))
            })
            .map(|(i, _)| i)
            .expect("remaining is non-empty while k <= pool size");
        picks.push(remaining.swap_remove(best));
    }
    Ok(make_sample(pool, picks))
}

/// Dispatch on the strategy. `Random` uses its embedded seed as-is.
pub fn sample(pool: &NormalizedPool, strategy: &Strategy, k: usize) -> Result<TrainingSample> {
    match strategy {
        Strategy::RetrieverTop => sample_retriever_top(pool, k),
        Strategy::RerankerTop => sample_reranker_top(pool, k),
        Strategy::Low => sample_low(pool, k),
        Strategy::Mid => sample_mid(pool, k),
        Strategy::Random { seed } => sample_random(pool, k, *seed),
        Strategy::Stratified => sample_stratified(pool, k),
    }
}

/// A built dataset plus the count of degenerate pools that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<TrainingSample>,
    pub skipped_degenerate: usize,
}

/// Build one sample per non-degenerate pool, sorted by query id.
///
/// For the `random` strategy the embedded seed acts as a global seed: each
/// query samples with its own seed derived from (global seed, query id), so
/// the dataset does not depend on pool iteration order.
pub fn build_dataset(
    pools: &[NormalizedPool],
    strategy: &Strategy,
    k: usize,
) -> Result<Dataset> {
    let mut samples = Vec::with_capacity(pools.len());
    let mut skipped = 0usize;
    for pool in pools {
        if pool.degenerate {
            skipped += 1;
            continue;
        }
        let sample = match strategy {
            Strategy::Random { seed } => {
                sample_random(pool, k, rng::query_seed(*seed, &pool.query_id))?
            }
            other => sample(pool, other, k)?,
        };
        samples.push(sample);
    }
    samples.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    if skipped > 0 {
        log::info!("build_dataset: skipped {skipped} degenerate pool(s)");
    }
    Ok(Dataset {
        samples,
        skipped_degenerate: skipped,
    })
}

// ── Persistence ─────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    query_id: String,
    positive: SamplePositive,
    negatives: Vec<SampleNegative>,
    strategy: StrategyTag,
    k: usize,
}

#[derive(Serialize, Deserialize)]
struct SamplePositive {
    doc_id: String,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
struct SampleNegative {
    doc_id: String,
    norm: f64,
}

/// Write samples as `samples.jsonl` with the producing strategy and K
/// attached to every record.
pub fn write_samples(
    path: &Path,
    samples: &[TrainingSample],
    strategy_tag: StrategyTag,
    k: usize,
) -> Result<()> {
    let records: Vec<SampleRecord> = samples
        .iter()
        .map(|s| SampleRecord {
            query_id: s.query_id.clone(),
            positive: SamplePositive {
                doc_id: s.positive_doc_id.clone(),
                norm: s.positive_norm,
            },
            negatives: s
                .selected
                .iter()
                .map(|n| SampleNegative {
                    doc_id: n.doc_id.clone(),
                    norm: n.norm,
                })
                .collect(),
            strategy: strategy_tag,
            k,
        })
        .collect();
    io::write_jsonl(path, &records)
}

/// Samples read back from disk plus the (strategy, k) stamp of the first
/// record, when the file was non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<TrainingSample>,
    pub stamp: Option<(StrategyTag, usize)>,
}

/// Read back `samples.jsonl`.
pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let rows: Vec<(usize, SampleRecord)> = io::read_jsonl(path)?;
    let stamp = rows.first().map(|(_, r)| (r.strategy, r.k));
    let samples = rows
        .into_iter()
        .map(|(_, r)| TrainingSample {
            query_id: r.query_id,
            positive_doc_id: r.positive.doc_id,
            positive_norm: r.positive.norm,
            selected: r
                .negatives
                .into_iter()
                .map(|n| SelectedNegative {
                    doc_id: n.doc_id,
                    norm: n.norm,
                    retriever_rank: None,
                })
                .collect(),
        })
        .collect();
    Ok(SampleSet { samples, stamp })
}
