//! Corpus data model: queries, documents, teacher score rows, and per-query
//! candidate pools.
//!
//! All file formats are JSON-Lines, UTF-8, one record per line. A candidate
//! pool holds one query's positive document plus an ordered list of negative
//! candidates: the retrieved block first (ascending retriever rank), then the
//! randomly added block in insertion order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// A query; `text` is optional because scoring pipelines only need ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub text: Option<String>,
}

/// A document, mirroring [`QueryRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub doc_id: String,
    pub text: Option<String>,
}

/// One externally computed teacher score for a (query, doc) pair.
///
/// `retriever_rank` is present for candidates that came from the first-stage
/// retrieval block (0 = best) and absent for randomly added pool members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub query_id: String,
    pub doc_id: String,
    #[serde(rename = "score")]
    pub raw_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_rank: Option<u32>,
}

/// A pool member: a negative candidate with its raw teacher score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub doc_id: String,
    #[serde(rename = "score")]
    pub raw_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_rank: Option<u32>,
}

/// The positive document of a pool with its raw teacher score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveEntry {
    pub doc_id: String,
    #[serde(rename = "score")]
    pub raw_score: f64,
}

/// Per-query candidate pool: the positive plus ordered negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub query_id: String,
    pub positive: PositiveEntry,
    pub negatives: Vec<PoolEntry>,
}

impl CandidatePool {
    pub fn pool_size(&self) -> usize {
        self.negatives.len()
    }

    /// True when all raw scores (positive included) are equal, so min-max
    /// normalization has no signal to spread.
    pub fn is_degenerate(&self) -> bool {
        self.negatives
            .iter()
            .all(|n| n.raw_score == self.positive.raw_score)
    }

    /// Reorder negatives into the canonical order: ranked block first by
    /// ascending rank, then rankless entries by ascending doc id. Used to
    /// compare pools assembled from differently ordered inputs.
    pub fn canonicalize(&mut self) {
        self.negatives.sort_by(|a, b| {
            entry_block_key(a)
                .cmp(&entry_block_key(b))
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
    }
}

fn entry_block_key(entry: &PoolEntry) -> (u8, u32) {
    match entry.retriever_rank {
        Some(rank) => (0, rank),
        None => (1, 0),
    }
}

// ── File ingestion ──────────────────────────────────────────────────────

#[derive(Deserialize)]
struct IdRecord {
    id: String,
    #[serde(default)]
    text: Option<String>,
}

fn load_id_records(path: &Path) -> Result<Vec<(String, Option<String>)>> {
    let rows: Vec<(usize, IdRecord)> = io::read_jsonl(path)?;
    let mut seen: HashSet<String> = HashSet::with_capacity(rows.len());
    let mut out = Vec::with_capacity(rows.len());
    for (line, row) in rows {
        if row.id.is_empty() {
            return Err(Error::EmptyId {
                path: path.to_path_buf(),
                line,
            });
        }
        if !seen.insert(row.id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: row.id,
            });
        }
        out.push((row.id, row.text));
    }
    Ok(out)
}

/// Load query and document corpora. Ids must be non-empty and unique per file.
pub fn load_corpus(
    queries_path: &Path,
    docs_path: &Path,
) -> Result<(Vec<QueryRecord>, Vec<DocRecord>)> {
    let queries = load_id_records(queries_path)?
        .into_iter()
        .map(|(query_id, text)| QueryRecord { query_id, text })
        .collect();
    let docs = load_id_records(docs_path)?
        .into_iter()
        .map(|(doc_id, text)| DocRecord { doc_id, text })
        .collect();
    Ok((queries, docs))
}

/// Load teacher score rows. Rejects non-finite scores and duplicate
/// (query, doc) pairs.
pub fn load_scores(path: &Path) -> Result<Vec<ScoreRow>> {
    let rows: Vec<(usize, ScoreRow)> = io::read_jsonl(path)?;
    let mut seen: HashSet<(String, String)> = HashSet::with_capacity(rows.len());
    let mut out = Vec::with_capacity(rows.len());
    for (_, row) in rows {
        if !row.raw_score.is_finite() {
            return Err(Error::NonFiniteScore {
                query_id: row.query_id,
                doc_id: row.doc_id,
            });
        }
        if !seen.insert((row.query_id.clone(), row.doc_id.clone())) {
            return Err(Error::DuplicateScoreRow {
                query_id: row.query_id,
                doc_id: row.doc_id,
            });
        }
        out.push(row);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct PositiveRow {
    query_id: String,
    doc_id: String,
}

/// Load the query -> positive doc registry; one positive per query.
pub fn load_positives(path: &Path) -> Result<HashMap<String, String>> {
    let rows: Vec<(usize, PositiveRow)> = io::read_jsonl(path)?;
    let mut out = HashMap::with_capacity(rows.len());
    for (line, row) in rows {
        if out.insert(row.query_id.clone(), row.doc_id).is_some() {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: row.query_id,
            });
        }
    }
    Ok(out)
}

// ── Pool assembly ───────────────────────────────────────────────────────

/// Group score rows by query and build one pool per query.
///
/// The positive's row is removed from the negatives and stored separately.
/// Negatives keep mining order: ranked block first by ascending rank (ties by
/// doc id), then the rankless block in input insertion order. Pools come out
/// sorted by query id.
pub fn assemble_pools(
    scores: &[ScoreRow],
    positives: &HashMap<String, String>,
) -> Result<Vec<CandidatePool>> {
    let mut by_query: BTreeMap<&str, Vec<&ScoreRow>> = BTreeMap::new();
    for row in scores {
        by_query.entry(&row.query_id).or_default().push(row);
    }

    let mut pools = Vec::with_capacity(by_query.len());
    for (query_id, rows) in by_query {
        let positive_doc = positives
            .get(query_id)
            .ok_or_else(|| Error::MissingPositive {
                query_id: query_id.to_string(),
            })?;

        let mut positive = None;
        let mut ranked: Vec<PoolEntry> = Vec::new();
        let mut random: Vec<PoolEntry> = Vec::new();
        for row in rows {
            if &row.doc_id == positive_doc {
                positive = Some(PositiveEntry {
                    doc_id: row.doc_id.clone(),
                    raw_score: row.raw_score,
                });
                continue;
            }
            let entry = PoolEntry {
                doc_id: row.doc_id.clone(),
                raw_score: row.raw_score,
                retriever_rank: row.retriever_rank,
            };
            if entry.retriever_rank.is_some() {
                ranked.push(entry);
            } else {
                random.push(entry);
            }
        }

        let positive = positive.ok_or_else(|| Error::PositiveWithoutScore {
            query_id: query_id.to_string(),
            doc_id: positive_doc.clone(),
        })?;

        ranked.sort_by(|a, b| {
            a.retriever_rank
                .cmp(&b.retriever_rank)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
        });
        ranked.extend(random);
        if ranked.is_empty() {
            return Err(Error::EmptyPool {
                query_id: query_id.to_string(),
            });
        }
        pools.push(CandidatePool {
            query_id: query_id.to_string(),
            positive,
            negatives: ranked,
        });
    }
    Ok(pools)
}

// ── Pool persistence ────────────────────────────────────────────────────

/// Write pools as `pools.jsonl` (atomic).
pub fn write_pools(path: &Path, pools: &[CandidatePool]) -> Result<()> {
    io::write_jsonl(path, pools)
}

/// Read back a `pools.jsonl` file, re-validating pool invariants.
pub fn read_pools(path: &Path) -> Result<Vec<CandidatePool>> {
    let rows: Vec<(usize, CandidatePool)> = io::read_jsonl(path)?;
    let mut pools = Vec::with_capacity(rows.len());
    let mut seen_queries = HashSet::new();
    for (line, pool) in rows {
        if !seen_queries.insert(pool.query_id.clone()) {
            return Err(Error::DuplicateId {
                path: path.to_path_buf(),
                line,
                id: pool.query_id,
            });
        }
        validate_pool(&pool)?;
        pools.push(pool);
    }
    Ok(pools)
}

fn validate_pool(pool: &CandidatePool) -> Result<()> {
    if pool.negatives.is_empty() {
        return Err(Error::EmptyPool {
            query_id: pool.query_id.clone(),
        });
    }
    if !pool.positive.raw_score.is_finite() {
        return Err(Error::NonFiniteScore {
            query_id: pool.query_id.clone(),
            doc_id: pool.positive.doc_id.clone(),
        });
    }
    let mut seen = HashSet::with_capacity(pool.negatives.len());
    for entry in &pool.negatives {
        if entry.doc_id == pool.positive.doc_id {
            return Err(Error::DuplicateScoreRow {
                query_id: pool.query_id.clone(),
                doc_id: entry.doc_id.clone(),
            });
        }
        if !seen.insert(entry.doc_id.as_str()) {
            return Err(Error::DuplicateScoreRow {
                query_id: pool.query_id.clone(),
                doc_id: entry.doc_id.clone(),
            });
        }
        if !entry.raw_score.is_finite() {
            return Err(Error::NonFiniteScore {
                query_id: pool.query_id.clone(),
                doc_id: entry.doc_id.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("in.jsonl");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    #[test]
    fn load_corpus_parses_two_queries() {
        let (_d1, q) = write_tmp("{\"id\":\"q1\"}\n{\"id\":\"q2\",\"text\":\"hello\"}\n");
        let (_d2, d) = write_tmp("{\"id\":\"d1\"}\n");
        let (queries, docs) = load_corpus(&q, &d).unwrap();
        assert_eq!(queries.len(), 2);
        assert_eq!(queries[1].text.as_deref(), Some("hello"));
        assert_eq!(docs.len(), 1);
    }

    #[test]
    fn load_corpus_empty_file_is_empty_list() {
        let (_d1, q) = write_tmp("");
        let (_d2, d) = write_tmp("");
        let (queries, docs) = load_corpus(&q, &d).unwrap();
        assert!(queries.is_empty());
        assert!(docs.is_empty());
    }

    #[test]
    fn load_corpus_duplicate_id_names_line() {
        let (_d1, q) = write_tmp("{\"id\":\"q1\"}\n{\"id\":\"q1\"}\n");
        let (_d2, d) = write_tmp("");
        let err = load_corpus(&q, &d).unwrap_err();
        match err {
            Error::DuplicateId { line, id, .. } => {
                assert_eq!(line, 2);
                assert_eq!(id, "q1");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_scores_parses_row() {
        let (_d, p) =
            write_tmp("{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":2.5,\"retriever_rank\":0}\n");
        let rows = load_scores(&p).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].raw_score, 2.5);
        assert_eq!(rows[0].retriever_rank, Some(0));
    }

    #[test]
    fn load_scores_rejects_nan() {
        // A bare NaN token is not valid JSON; a string is the wrong type.
        let (_d, p) = write_tmp("{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":\"NaN\"}\n");
        assert!(load_scores(&p).is_err());
        let (_d2, p2) = write_tmp("{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":NaN}\n");
        assert!(load_scores(&p2).is_err());
        // Overflowing literals are rejected at parse time.
        let (_d3, p3) = write_tmp("{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":1e999}\n");
        assert!(load_scores(&p3).is_err());
    }

    #[test]
    fn load_scores_rejects_duplicate_pair() {
        let (_d, p) = write_tmp(
            "{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":1.0}\n{\"query_id\":\"q1\",\"doc_id\":\"d3\",\"score\":2.0}\n",
        );
        assert!(matches!(
            load_scores(&p).unwrap_err(),
            Error::DuplicateScoreRow { .. }
        ));
    }

    fn row(q: &str, d: &str, score: f64, rank: Option<u32>) -> ScoreRow {
        ScoreRow {
            query_id: q.into(),
            doc_id: d.into(),
            raw_score: score,
            retriever_rank: rank,
        }
    }

    #[test]
    fn assemble_separates_positive_and_orders_blocks() {
        let scores = vec![
            row("q1", "rnd_b", 0.1, None),
            row("q1", "pos", 5.0, Some(0)),
            row("q1", "hit2", 3.0, Some(2)),
            row("q1", "hit1", 4.0, Some(1)),
            row("q1", "rnd_a", 0.2, None),
        ];
        let positives = HashMap::from([("q1".to_string(), "pos".to_string())]);
        let pools = assemble_pools(&scores, &positives).unwrap();
        assert_eq!(pools.len(), 1);
        let pool = &pools[0];
        assert_eq!(pool.positive.doc_id, "pos");
        assert_eq!(pool.pool_size(), 4);
        let order: Vec<&str> = pool.negatives.iter().map(|n| n.doc_id.as_str()).collect();
        // Ranked block by rank, then random block in insertion order.
        assert_eq!(order, vec!["hit1", "hit2", "rnd_b", "rnd_a"]);
    }

    #[test]
    fn assemble_small_pool_size() {
        let scores = vec![
            row("q1", "pos", 5.0, None),
            row("q1", "a", 1.0, None),
            row("q1", "b", 2.0, None),
            row("q1", "c", 3.0, None),
            row("q1", "d", 4.0, None),
        ];
        let positives = HashMap::from([("q1".to_string(), "pos".to_string())]);
        let pools = assemble_pools(&scores, &positives).unwrap();
        assert_eq!(pools[0].pool_size(), 4);
    }

    #[test]
    fn assemble_missing_positive_names_query() {
        let scores = vec![row("q9", "d1", 1.0, None)];
        let err = assemble_pools(&scores, &HashMap::new()).unwrap_err();
        match err {
            Error::MissingPositive { query_id } => assert_eq!(query_id, "q9"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn assemble_positive_without_score_row() {
        let scores = vec![row("q1", "d1", 1.0, None)];
        let positives = HashMap::from([("q1".to_string(), "missing".to_string())]);
        assert!(matches!(
            assemble_pools(&scores, &positives).unwrap_err(),
            Error::PositiveWithoutScore { .. }
        ));
    }

    #[test]
    fn pools_roundtrip_identically() {
        let scores = vec![
            row("q1", "pos", 5.0, None),
            row("q1", "a", 1.0, Some(0)),
            row("q1", "b", 2.0, None),
            row("q2", "pos2", 1.5, None),
            row("q2", "c", -0.5, Some(3)),
        ];
        let positives = HashMap::from([
            ("q1".to_string(), "pos".to_string()),
            ("q2".to_string(), "pos2".to_string()),
        ]);
        let pools = assemble_pools(&scores, &positives).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pools.jsonl");
        write_pools(&path, &pools).unwrap();
        let back = read_pools(&path).unwrap();
        assert_eq!(pools, back);
    }

    #[test]
    fn assembly_is_order_insensitive_after_canonicalization() {
        let scores = vec![
            row("q1", "pos", 5.0, None),
            row("q1", "a", 1.0, Some(1)),
            row("q1", "b", 2.0, Some(0)),
            row("q1", "x", 0.0, None),
            row("q1", "y", 0.5, None),
        ];
        let mut shuffled = scores.clone();
        shuffled.reverse();
        let positives = HashMap::from([("q1".to_string(), "pos".to_string())]);
        let mut a = assemble_pools(&scores, &positives).unwrap();
        let mut b = assemble_pools(&shuffled, &positives).unwrap();
        for pool in a.iter_mut().chain(b.iter_mut()) {
            pool.canonicalize();
        }
        assert_eq!(a, b);
    }
}
