//! Ranking metrics and full-corpus evaluation of a student model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::train::StudentModel;
use crate::harness::world::SyntheticWorld;

/// Doc indices sorted by score descending; ties go to the smaller index.
pub fn rank_docs(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| a.cmp(&b)));
    order
}

fn check_queries(n_rankings: usize, n_relevant: usize, cutoff: usize) -> Result<()> {
    if cutoff == 0 {
        return Err(Error::InvalidCutoff { k: cutoff });
    }
    if n_rankings != n_relevant {
        return Err(Error::DimensionMismatch {
            left: n_rankings,
            right: n_relevant,
        });
    }
    if n_rankings == 0 {
        return Err(Error::NoEvalQueries);
    }
    Ok(())
}

/// 1-based rank of `target` within `ranking`, if present.
fn rank_of(ranking: &[usize], target: usize) -> Option<usize> {
    ranking.iter().position(|&d| d == target).map(|p| p + 1)
}

/// Mean reciprocal rank of the single relevant doc, zero beyond rank k.
pub fn mrr_at_k(rankings: &[Vec<usize>], relevant: &[usize], k: usize) -> Result<f64> {
    check_queries(rankings.len(), relevant.len(), k)?;
    let total: f64 = rankings
        .iter()
        .zip(relevant)
        .map(|(ranking, &rel)| match rank_of(ranking, rel) {
            Some(rank) if rank <= k => 1.0 / rank as f64,
            _ => 0.0,
        })
        .sum();
    Ok(total / rankings.len() as f64)
}

/// Binary-relevance nDCG at cutoff k; queries with no relevant docs
/// contribute zero.
pub fn ndcg_at_k(rankings: &[Vec<usize>], relevant: &[Vec<usize>], k: usize) -> Result<f64> {
    check_queries(rankings.len(), relevant.len(), k)?;
    let mut total = 0.0;
    for (ranking, rel) in rankings.iter().zip(relevant) {
        if rel.is_empty() {
            continue;
        }
        let dcg: f64 = ranking
            .iter()
            .take(k)
            .enumerate()
            .filter(|(_, d)| rel.contains(d))
            .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
            .sum();
        let ideal: f64 = (0..rel.len().min(k))
            .map(|i| 1.0 / ((i + 2) as f64).log2())
            .sum();
        total += dcg / ideal;
    }
    Ok(total / rankings.len() as f64)
}

/// Fraction of queries whose single relevant doc appears in the top n.
pub fn recall_at_n(rankings: &[Vec<usize>], relevant: &[usize], n: usize) -> Result<f64> {
    check_queries(rankings.len(), relevant.len(), n)?;
    let hits = rankings
        .iter()
        .zip(relevant)
        .filter(|(ranking, &rel)| matches!(rank_of(ranking, rel), Some(rank) if rank <= n))
        .count();
    Ok(hits as f64 / rankings.len() as f64)
}

/// Held-out evaluation summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mrr_at_10: f64,
    pub ndcg_at_10: f64,
    pub recall_at_n: f64,
    pub n_eval_queries: usize,
}

/// Rank the full corpus for each query with an arbitrary scorer.
pub fn evaluate_with<F>(
    world: &SyntheticWorld,
    queries: &[usize],
    recall_cutoff: usize,
    scorer: F,
) -> Result<EvalReport>
where
    F: Fn(usize, usize) -> Result<f64>,
{
    if queries.is_empty() {
        return Err(Error::NoEvalQueries);
    }
    if recall_cutoff == 0 {
        return Err(Error::InvalidCutoff { k: recall_cutoff });
    }
    let n_docs = world.config.n_docs;
    let mut rankings = Vec::with_capacity(queries.len());
    let mut relevant = Vec::with_capacity(queries.len());
    for &q in queries {
        let mut scores = Vec::with_capacity(n_docs);
        for d in 0..n_docs {
            scores.push(scorer(q, d)?);
        }
        rankings.push(rank_docs(&scores));
        relevant.push(world.positives[q]);
    }
    let relevant_sets: Vec<Vec<usize>> = relevant.iter().map(|&r| vec![r]).collect();
    Ok(EvalReport {
        mrr_at_10: mrr_at_k(&rankings, &relevant, 10)?,
        ndcg_at_10: ndcg_at_k(&rankings, &relevant_sets, 10)?,
        recall_at_n: recall_at_n(&rankings, &relevant, recall_cutoff)?,
        n_eval_queries: queries.len(),
    })
}

fn unit(v: Vec<f64>) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

/// Rank the full corpus for each query with the student's cosine scores.
pub fn evaluate(
    world: &SyntheticWorld,
    model: &StudentModel,
    queries: &[usize],
    recall_cutoff: usize,
) -> Result<EvalReport> {
    let query_units: Vec<Vec<f64>> = world
        .query_features
        .iter()
        .map(|f| unit(model.embed_query(f)))
        .collect::<Result<_>>()?;
    let doc_units: Vec<Vec<f64>> = world
        .doc_features
        .iter()
        .map(|f| unit(model.embed_doc(f)))
        .collect::<Result<_>>()?;
    evaluate_with(world, queries, recall_cutoff, |q, d| {
        Ok(query_units[q].iter().zip(&doc_units[d]).map(|(a, b)| a * b).sum())
    })
}
