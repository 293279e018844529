//! Synthetic retrieval world: latent vectors, observable features, a noisy
//! teacher, a weak retriever, and per-query candidate-pool mining.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{CandidatePool, PoolEntry, PositiveEntry};
use crate::error::{Error, Result};
use crate::io;
use crate::rng::{derive_seed, fnv1a64, SplitMix64};

/// Everything needed to regenerate a world bit-exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub n_queries: usize,
    pub n_docs: usize,
    pub latent_dim: usize,
    pub feature_dim: usize,
    pub student_dim: usize,
    pub feature_noise: f64,
    pub teacher_noise: f64,
    pub pool_top: usize,
    pub pool_rand: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    /// The standard tiny config: minutes-scale CPU runs with a pool that is
    /// half retrieved, half random.
    fn default() -> Self {
        WorldConfig {
            n_queries: 320,
            n_docs: 2048,
            latent_dim: 16,
            feature_dim: 32,
            student_dim: 16,
            feature_noise: 0.1,
            teacher_noise: 0.1,
            pool_top: 20,
            pool_rand: 20,
            seed: 42,
        }
    }
}

impl WorldConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(Error::InvalidConfig { message });
        if self.latent_dim < 2 || self.feature_dim < 2 || self.student_dim < 2 {
            return fail(format!(
                "dimensions must be >= 2, got latent {}, feature {}, student {}",
                self.latent_dim, self.feature_dim, self.student_dim
            ));
        }
        if self.n_queries == 0 || self.n_docs < 2 {
            return fail(format!(
                "need at least one query and two docs, got {} and {}",
                self.n_queries, self.n_docs
            ));
        }
        if self.n_queries > 1_000_000 || self.n_docs > 1_000_000 {
            return fail("entity counts above 1e6 exceed the 6-digit id space".into());
        }
        if self.pool_top + self.pool_rand == 0 {
            return fail("pool_top + pool_rand must be at least 1".into());
        }
        if self.pool_top + self.pool_rand > self.n_docs - 1 {
            return fail(format!(
                "pool_top + pool_rand = {} does not fit in {} docs minus the positive",
                self.pool_top + self.pool_rand,
                self.n_docs
            ));
        }
        if !self.feature_noise.is_finite() || self.feature_noise < 0.0 {
            return fail(format!("feature_noise must be >= 0, got {}", self.feature_noise));
        }
        if !self.teacher_noise.is_finite() || self.teacher_noise < 0.0 {
            return fail(format!("teacher_noise must be >= 0, got {}", self.teacher_noise));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<WorldConfig> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let cfg: WorldConfig = serde_json::from_str(&text).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_path(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("config serializes");
        text.push('\n');
        io::atomic_write(path, text.as_bytes())
    }
}

/// Row-major dense matrix; just enough linear algebra for the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Entries scale * N(0,1) from the given stream.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut SplitMix64, scale: f64) -> Matrix {
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| scale * rng.next_normal()).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols, "matvec dimension mismatch");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// self += scale * other, entrywise.
    pub fn add_scaled(&mut self, other: &Matrix, scale: f64) {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "add_scaled shape mismatch"
        );
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// self += scale * u x^T (rank-one update).
    pub fn add_outer(&mut self, u: &[f64], x: &[f64], scale: f64) {
        assert_eq!(u.len(), self.rows, "outer product row mismatch");
        assert_eq!(x.len(), self.cols, "outer product col mismatch");
        for (r, &ur) in u.iter().enumerate() {
            let row = &mut self.data[r * self.cols..(r + 1) * self.cols];
            for (cell, &xc) in row.iter_mut().zip(x) {
                *cell += scale * ur * xc;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

fn tag(name: &str) -> u64 {
    fnv1a64(name.as_bytes())
}

fn unit_normal_vector(dim: usize, rng: &mut SplitMix64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..dim).map(|_| rng.next_normal()).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v[0] = 1.0;
        return v;
    }
    for x in &mut v {
        *x /= norm;
    }
    v
}

fn cosine_unit(a: &[f64], b: &[f64]) -> f64 {
    // Both inputs are unit vectors, so the dot product is the cosine.
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A generated world. Latents are private: the teacher and retriever
/// methods are the only window into them, mirroring a black-box scorer.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticWorld {
    pub config: WorldConfig,
    pub query_ids: Vec<String>,
    pub doc_ids: Vec<String>,
    query_latents: Vec<Vec<f64>>,
    doc_latents: Vec<Vec<f64>>,
    pub query_features: Vec<Vec<f64>>,
    pub doc_features: Vec<Vec<f64>>,
    pub feature_map: Matrix,
    query_proj: Vec<Vec<f64>>,
    doc_proj: Vec<Vec<f64>>,
    pub positives: Vec<usize>,
    pub train_queries: Vec<usize>,
    pub dev_queries: Vec<usize>,
    query_index: HashMap<String, usize>,
    doc_index: HashMap<String, usize>,
}

impl SyntheticWorld {
    /// Noiseless teacher: cosine of the latent vectors.
    pub fn teacher_noiseless(&self, query: usize, doc: usize) -> f64 {
        cosine_unit(&self.query_latents[query], &self.doc_latents[doc])
    }

    /// Observed teacher: noiseless value plus per-pair Gaussian noise.
    pub fn teacher_noisy(&self, query: usize, doc: usize) -> f64 {
        if self.config.teacher_noise == 0.0 {
            return self.teacher_noiseless(query, doc);
        }
        let seed = derive_seed(&[
            self.config.seed,
            tag("teacher-noise"),
            query as u64,
            doc as u64,
        ]);
        self.teacher_noiseless(query, doc)
            + self.config.teacher_noise * SplitMix64::new(seed).next_normal()
    }

    /// First-stage retriever: cosine of rank-reduced latent projections.
    pub fn retriever_score(&self, query: usize, doc: usize) -> f64 {
        let q = &self.query_proj[query];
        let d = &self.doc_proj[doc];
        let dot: f64 = q.iter().zip(d).map(|(a, b)| a * b).sum();
        let nq = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nd = d.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nq == 0.0 || nd == 0.0 {
            return 0.0;
        }
        dot / (nq * nd)
    }

    pub fn query_idx(&self, id: &str) -> Option<usize> {
        self.query_index.get(id).copied()
    }

    pub fn doc_idx(&self, id: &str) -> Option<usize> {
        self.doc_index.get(id).copied()
    }
}

/// Generate the world deterministically from its config.
pub fn gen_world(config: &WorldConfig) -> Result<SyntheticWorld> {
    config.validate()?;
    let seed = config.seed;

    let latent = |kind: &str, i: usize, dim: usize| {
        let mut rng = SplitMix64::new(derive_seed(&[seed, tag(kind), i as u64]));
        unit_normal_vector(dim, &mut rng)
    };
    let query_latents: Vec<Vec<f64>> = (0..config.n_queries)
        .map(|i| latent("query-latent", i, config.latent_dim))
        .collect();
    let doc_latents: Vec<Vec<f64>> = (0..config.n_docs)
        .map(|i| latent("doc-latent", i, config.latent_dim))
        .collect();

    // One shared observation map for queries and docs, entries scaled so
    // feature coordinates stay O(1) for unit latents.
    let mut map_rng = SplitMix64::new(derive_seed(&[seed, tag("feature-map")]));
    let feature_map = Matrix::gaussian(
        config.feature_dim,
        config.latent_dim,
        &mut map_rng,
        1.0 / (config.latent_dim as f64).sqrt(),
    );
    let featurize = |kind: &str, i: usize, latent: &[f64]| {
        let mut f = feature_map.matvec(latent);
        if config.feature_noise > 0.0 {
            let mut rng = SplitMix64::new(derive_seed(&[seed, tag(kind), i as u64]));
            for x in &mut f {
                *x += config.feature_noise * rng.next_normal();
            }
        }
        f
    };
    let query_features: Vec<Vec<f64>> = query_latents
        .iter()
        .enumerate()
        .map(|(i, l)| featurize("query-feature-noise", i, l))
        .collect();
    let doc_features: Vec<Vec<f64>> = doc_latents
        .iter()
        .enumerate()
        .map(|(i, l)| featurize("doc-feature-noise", i, l))
        .collect();

    // The retriever sees only a low-rank projection of the latents.
    let proj_dim = (config.latent_dim / 2).max(2);
    let mut proj_rng = SplitMix64::new(derive_seed(&[seed, tag("retriever-proj")]));
    let projection = Matrix::gaussian(
        proj_dim,
        config.latent_dim,
        &mut proj_rng,
        1.0 / (config.latent_dim as f64).sqrt(),
    );
    let query_proj: Vec<Vec<f64>> = query_latents.iter().map(|l| projection.matvec(l)).collect();
    let doc_proj: Vec<Vec<f64>> = doc_latents.iter().map(|l| projection.matvec(l)).collect();

    let positives: Vec<usize> = query_latents
        .iter()
        .map(|q| {
            let mut best = 0usize;
            let mut best_score = f64::NEG_INFINITY;
            for (d, doc) in doc_latents.iter().enumerate() {
                let s = cosine_unit(q, doc);
                if s > best_score {
                    best_score = s;
                    best = d;
                }
            }
            best
        })
        .collect();

    // 80/20 split by hashed query index: stable under everything except the
    // seed and the query count.
    let mut order: Vec<usize> = (0..config.n_queries).collect();
    order.sort_by_key(|&i| (derive_seed(&[seed, tag("split"), i as u64]), i));
    let n_train = config.n_queries * 4 / 5;
    let mut train_queries = order[..n_train].to_vec();
    let mut dev_queries = order[n_train..].to_vec();
    train_queries.sort_unstable();
    dev_queries.sort_unstable();

    let query_ids: Vec<String> = (0..config.n_queries).map(|i| format!("q{i:06}")).collect();
    let doc_ids: Vec<String> = (0..config.n_docs).map(|i| format!("d{i:06}")).collect();
    let query_index = query_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();
    let doc_index = doc_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.clone(), i))
        .collect();

    Ok(SyntheticWorld {
        config: config.clone(),
        query_ids,
        doc_ids,
        query_latents,
        doc_latents,
        query_features,
        doc_features,
        feature_map,
        query_proj,
        doc_proj,
        positives,
        train_queries,
        dev_queries,
        query_index,
        doc_index,
    })
}

/// Mine one candidate pool per query: the retriever's top block (ranked,
/// positive excluded) plus a uniform random block from the rest of the
/// corpus, with noisy teacher scores attached to every member.
pub fn mine_pools(world: &SyntheticWorld) -> Result<Vec<CandidatePool>> {
    let cfg = &world.config;
    if cfg.pool_top + cfg.pool_rand > cfg.n_docs - 1 {
        return Err(Error::InvalidConfig {
            message: "corpus too small for the requested pool".into(),
        });
    }
    let mut pools = Vec::with_capacity(cfg.n_queries);
    for q in 0..cfg.n_queries {
        let positive = world.positives[q];
        let mut scored: Vec<(usize, f64)> = (0..cfg.n_docs)
            .filter(|&d| d != positive)
            .map(|d| (d, world.retriever_score(q, d)))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut negatives: Vec<PoolEntry> = Vec::with_capacity(cfg.pool_top + cfg.pool_rand);
        for (rank0, &(d, _)) in scored[..cfg.pool_top].iter().enumerate() {
            negatives.push(PoolEntry {
                doc_id: world.doc_ids[d].clone(),
                raw_score: world.teacher_noisy(q, d),
                retriever_rank: Some(rank0 as u32 + 1),
            });
        }

        let mut rest: Vec<usize> = scored[cfg.pool_top..].iter().map(|&(d, _)| d).collect();
        rest.sort_unstable();
        let mut rng = SplitMix64::new(derive_seed(&[
            cfg.seed,
            tag("pool-random-block"),
            q as u64,
        ]));
        for i in rng.choose_indices(rest.len(), cfg.pool_rand) {
            let d = rest[i];
            negatives.push(PoolEntry {
                doc_id: world.doc_ids[d].clone(),
                raw_score: world.teacher_noisy(q, d),
                retriever_rank: None,
            });
        }

        pools.push(CandidatePool {
            query_id: world.query_ids[q].clone(),
            positive: PositiveEntry {
                doc_id: world.doc_ids[positive].clone(),
                raw_score: world.teacher_noisy(q, positive),
            },
            negatives,
        });
    }
    Ok(pools)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> WorldConfig {
        WorldConfig {
            n_queries: 16,
            n_docs: 64,
            latent_dim: 4,
            feature_dim: 8,
            student_dim: 4,
            feature_noise: 0.05,
            teacher_noise: 0.05,
            pool_top: 5,
            pool_rand: 5,
            seed: 7,
        }
    }

    #[test]
    fn config_validation() {
        assert!(WorldConfig::default().validate().is_ok());
        let mut c = tiny_config();
        c.latent_dim = 1;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.pool_top = 60;
        c.pool_rand = 10;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.teacher_noise = -0.1;
        assert!(c.validate().is_err());
        let mut c = tiny_config();
        c.n_docs = 2_000_000;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("world.json");
        let cfg = tiny_config();
        cfg.to_path(&path).unwrap();
        assert_eq!(WorldConfig::from_path(&path).unwrap(), cfg);
        let text = std::fs::read_to_string(&path).unwrap();
        for field in [
            "n_queries",
            "n_docs",
            "latent_dim",
            "feature_dim",
            "student_dim",
            "feature_noise",
            "teacher_noise",
            "pool_top",
            "pool_rand",
            "seed",
        ] {
            assert!(text.contains(field), "missing field {field}");
        }
    }

    #[test]
    fn world_is_deterministic() {
        let cfg = tiny_config();
        let a = gen_world(&cfg).unwrap();
        let b = gen_world(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.teacher_noisy(3, 17), b.teacher_noisy(3, 17));
    }

    #[test]
    fn noiseless_positive_is_strict_max() {
        let mut cfg = tiny_config();
        cfg.teacher_noise = 0.0;
        let w = gen_world(&cfg).unwrap();
        for q in 0..cfg.n_queries {
            let p = w.positives[q];
            let best = w.teacher_noiseless(q, p);
            assert_eq!(w.teacher_noisy(q, p), best);
            for d in 0..cfg.n_docs {
                if d != p {
                    assert!(w.teacher_noiseless(q, d) < best);
                }
            }
        }
    }

    #[test]
    fn split_is_80_20_and_disjoint() {
        let w = gen_world(&tiny_config()).unwrap();
        assert_eq!(w.train_queries.len(), 12);
        assert_eq!(w.dev_queries.len(), 4);
        let mut all: Vec<usize> = w
            .train_queries
            .iter()
            .chain(&w.dev_queries)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..16).collect::<Vec<_>>());
    }

    #[test]
    fn pools_have_requested_shape() {
        let cfg = tiny_config();
        let w = gen_world(&cfg).unwrap();
        let pools = mine_pools(&w).unwrap();
        assert_eq!(pools.len(), cfg.n_queries);
        for (q, pool) in pools.iter().enumerate() {
            assert_eq!(pool.negatives.len(), 10);
            let ranked: Vec<_> = pool
                .negatives
                .iter()
                .filter(|e| e.retriever_rank.is_some())
                .collect();
            assert_eq!(ranked.len(), 5);
            // Positive never appears as a negative.
            assert!(pool.negatives.iter().all(|e| e.doc_id != pool.positive.doc_id));
            // Ranked and random blocks are disjoint.
            let mut ids: Vec<_> = pool.negatives.iter().map(|e| &e.doc_id).collect();
            ids.sort_unstable();
            ids.dedup();
            assert_eq!(ids.len(), 10);
            assert_eq!(pool.query_id, w.query_ids[q]);
        }
    }

    #[test]
    fn pool_rank_follows_retriever_order() {
        let cfg = tiny_config();
        let w = gen_world(&cfg).unwrap();
        let pools = mine_pools(&w).unwrap();
        for (q, pool) in pools.iter().enumerate() {
            let mut last = f64::INFINITY;
            for entry in pool.negatives.iter().filter(|e| e.retriever_rank.is_some()) {
                let d = w.doc_idx(&entry.doc_id).unwrap();
                let s = w.retriever_score(q, d);
                assert!(s <= last);
                last = s;
            }
        }
    }

    #[test]
    fn matrix_ops() {
        let mut rng = SplitMix64::new(1);
        let m = Matrix::gaussian(3, 2, &mut rng, 1.0);
        let v = m.matvec(&[1.0, 0.0]);
        assert_eq!(v, vec![m.get(0, 0), m.get(1, 0), m.get(2, 0)]);
        let mut z = Matrix::zeros(2, 2);
        z.add_outer(&[1.0, 2.0], &[3.0, 4.0], 0.5);
        assert_eq!(z.get(0, 0), 1.5);
        assert_eq!(z.get(1, 1), 4.0);
    }
}
