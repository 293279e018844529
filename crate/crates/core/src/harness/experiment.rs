//! The K-sweep experiment: every (strategy, K, objective) cell trained from
//! a shared per-seed stage-1 checkpoint and evaluated on held-out queries.

use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::metrics::{evaluate, EvalReport};
use crate::harness::train::{stage1_contrastive, stage2_distill, StudentModel, TrainConfig};
use crate::harness::world::{gen_world, mine_pools, SyntheticWorld, WorldConfig};
use crate::io;
use crate::losses::Objective;
use crate::rng::{derive_seed, fnv1a64};
use crate::sampling::{build_dataset, Strategy, StrategyTag};
use crate::scores::{minmax_normalize, NormalizedPool};

/// Full experiment description. `seeds` is a replicate count: replicate s
/// regenerates the world and the student init from a seed derived from
/// (world seed, s), so replicates are independent while any two cells
/// within a replicate share the world, pools, and stage-1 checkpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub world: WorldConfig,
    pub train: TrainConfig,
    pub strategies: Vec<StrategyTag>,
    pub ks: Vec<usize>,
    pub objectives: Vec<Objective>,
    pub seeds: u64,
    pub recall_cutoff: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            world: WorldConfig::default(),
            train: TrainConfig::default(),
            strategies: StrategyTag::ALL.to_vec(),
            ks: vec![4, 8, 16],
            objectives: Objective::ALL.to_vec(),
            seeds: 5,
            recall_cutoff: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.world.validate()?;
        self.train.validate()?;
        let fail = |message: String| Err(Error::InvalidConfig { message });
        if self.strategies.is_empty() || self.ks.is_empty() || self.objectives.is_empty() {
            return fail("strategies, ks, and objectives must all be non-empty".into());
        }
        if self.seeds == 0 {
            return fail("need at least one seed".into());
        }
        if self.recall_cutoff == 0 {
            return fail("recall cutoff must be >= 1".into());
        }
        if let Some(&k) = self.ks.iter().find(|&&k| k == 0) {
            return fail(format!("k must be >= 1, got {k}"));
        }
        Ok(())
    }
}

/// Metrics of a completed cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub mrr10: f64,
    pub ndcg10: f64,
    pub recall_n: f64,
    pub final_loss: f64,
}

/// One row of the result table; `metrics` is None for aborted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub strategy: StrategyTag,
    pub k: usize,
    pub objective: Objective,
    pub seed: u64,
    pub metrics: Option<CellMetrics>,
}

impl ExperimentRow {
    pub fn status(&self) -> &'static str {
        if self.metrics.is_some() {
            "ok"
        } else {
            "aborted"
        }
    }
}

fn stream(name: &str) -> u64 {
    fnv1a64(name.as_bytes())
}

struct SeedPrep {
    seed_index: u64,
    replicate_seed: u64,
    world: SyntheticWorld,
    train_pools: Vec<NormalizedPool>,
    checkpoint: StudentModel,
}

fn prep_seed(cfg: &ExperimentConfig, seed_index: u64) -> Result<SeedPrep> {
    let replicate_seed = derive_seed(&[cfg.world.seed, stream("replicate"), seed_index]);
    let mut world_cfg = cfg.world.clone();
    world_cfg.seed = replicate_seed;
    let world = gen_world(&world_cfg)?;

    let train_ids: HashSet<&str> = world
        .train_queries
        .iter()
        .map(|&q| world.query_ids[q].as_str())
        .collect();
    let pools = mine_pools(&world)?;
    let train_pools: Vec<NormalizedPool> = pools
        .iter()
        .filter(|p| train_ids.contains(p.query_id.as_str()))
        .map(minmax_normalize)
        .collect::<Result<_>>()?;

    let init = StudentModel::init(&world_cfg, derive_seed(&[replicate_seed, stream("init")]));
    let mut train_cfg = cfg.train.clone();
    train_cfg.train_seed = derive_seed(&[replicate_seed, stream("stage1")]);
    let checkpoint = stage1_contrastive(&world, &init, &train_cfg)?;
    Ok(SeedPrep {
        seed_index,
        replicate_seed,
        world,
        train_pools,
        checkpoint,
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    prep: &SeedPrep,
    tag: StrategyTag,
    k: usize,
    objective: Objective,
) -> Result<ExperimentRow> {
    let row = |metrics| ExperimentRow {
        strategy: tag,
        k,
        objective,
        seed: prep.seed_index,
        metrics,
    };
    let sampling_seed = derive_seed(&[prep.replicate_seed, stream("sampling")]);
    let strategy = Strategy::from_tag(tag, Some(sampling_seed))?;
    let dataset = build_dataset(&prep.train_pools, &strategy, k)?;

    let mut train_cfg = cfg.train.clone();
    train_cfg.train_seed = derive_seed(&[prep.replicate_seed, stream("stage2")]);
    match stage2_distill(
        &prep.world,
        &prep.checkpoint,
        &dataset.samples,
        objective,
        &train_cfg,
    ) {
        Ok(outcome) => {
            if outcome.final_loss >= outcome.initial_loss {
                log::warn!(
                    "cell ({tag}, k={k}, {objective}, seed {}) did not improve: {} -> {}",
                    prep.seed_index,
                    outcome.initial_loss,
                    outcome.final_loss
                );
            }
            let report: EvalReport = evaluate(
                &prep.world,
                &outcome.model,
                &prep.world.dev_queries,
                cfg.recall_cutoff,
            )?;
            Ok(row(Some(CellMetrics {
                mrr10: report.mrr_at_10,
                ndcg10: report.ndcg_at_10,
                recall_n: report.recall_at_n,
                final_loss: outcome.final_loss,
            })))
        }
        Err(Error::NonFiniteLoss { context }) => {
            log::warn!(
                "cell ({tag}, k={k}, {objective}, seed {}) aborted: non-finite loss at {context}",
                prep.seed_index
            );
            Ok(row(None))
        }
        Err(Error::ZeroVector) => {
            log::warn!(
                "cell ({tag}, k={k}, {objective}, seed {}) aborted: embedding collapsed to zero",
                prep.seed_index
            );
            Ok(row(None))
        }
        Err(e) => Err(e),
    }
}

/// Worker cap from `KD_SAMPLER_THREADS`; unset means one worker per logical
/// CPU, a set value must parse as a non-negative integer (0 = default).
fn thread_cap() -> Result<usize> {
    match std::env::var("KD_SAMPLER_THREADS") {
        Err(_) => Ok(0),
        Ok(raw) => raw.trim().parse().map_err(|_| Error::InvalidConfig {
            message: format!("KD_SAMPLER_THREADS must be a non-negative integer, got \"{raw}\""),
        }),
    }
}

/// Run the full cross-product and return rows sorted by
/// (strategy, k, objective, seed).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_cap()?)
        .build()
        .map_err(|e| Error::InvalidConfig {
            message: format!("cannot build worker pool: {e}"),
        })?;

    pool.install(|| {
        let preps: Vec<SeedPrep> = (0..cfg.seeds)
            .into_par_iter()
            .map(|s| prep_seed(cfg, s))
            .collect::<Result<_>>()?;

        let mut cells = Vec::new();
        for prep in &preps {
            for &tag in &cfg.strategies {
                for &k in &cfg.ks {
                    for &objective in &cfg.objectives {
                        cells.push((prep, tag, k, objective));
                    }
                }
            }
        }
        let mut rows: Vec<ExperimentRow> = cells
            .into_par_iter()
            .map(|(prep, tag, k, objective)| run_cell(cfg, prep, tag, k, objective))
            .collect::<Result<_>>()?;
        rows.sort_by(|a, b| {
            a.strategy
                .as_str()
                .cmp(b.strategy.as_str())
                .then_with(|| a.k.cmp(&b.k))
                .then_with(|| a.objective.as_str().cmp(b.objective.as_str()))
                .then_with(|| a.seed.cmp(&b.seed))
        });
        Ok(rows)
    })
}

/// Render the result table; aborted rows carry empty metric fields.
pub fn results_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from("strategy,k,objective,seed,mrr10,ndcg10,recall_n,final_loss,status\n");
    for row in rows {
        match &row.metrics {
            Some(m) => out.push_str(&format!(
                "{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
                row.strategy,
                row.k,
                row.objective,
                row.seed,
                m.mrr10,
                m.ndcg10,
                m.recall_n,
                m.final_loss,
                row.status()
            )),
            None => out.push_str(&format!(
                "{},{},{},{},,,,,{}\n",
                row.strategy, row.k, row.objective, row.seed,
                row.status()
            )),
        }
    }
    out
}

pub fn write_results_csv(path: &Path, rows: &[ExperimentRow]) -> Result<()> {
    io::atomic_write(path, results_csv(rows).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn micro_config() -> ExperimentConfig {
        ExperimentConfig {
            world: WorldConfig {
                n_queries: 20,
                n_docs: 64,
                latent_dim: 4,
                feature_dim: 8,
                student_dim: 4,
                feature_noise: 0.05,
                teacher_noise: 0.05,
                pool_top: 6,
                pool_rand: 6,
                seed: 9,
            },
            train: TrainConfig {
                stage1_epochs: 2,
                stage2_epochs: 2,
                ..TrainConfig::default()
            },
            strategies: vec![StrategyTag::Stratified, StrategyTag::Random],
            ks: vec![4],
            objectives: vec![Objective::Kl],
            seeds: 2,
            recall_cutoff: 10,
        }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let mut c = micro_config();
        c.seeds = 0;
        assert!(c.validate().is_err());
        let mut c = micro_config();
        c.ks = vec![];
        assert!(c.validate().is_err());
        let mut c = micro_config();
        c.ks = vec![0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn experiment_shape_and_determinism() {
        let cfg = micro_config();
        let rows = run_experiment(&cfg).unwrap();
        // 2 strategies, one k, one objective, 2 seeds.
        assert_eq!(rows.len(), 4);
        for tag in [StrategyTag::Random, StrategyTag::Stratified] {
            for seed in 0..2 {
                assert!(rows
                    .iter()
                    .any(|r| r.strategy == tag && r.seed == seed && r.k == 4));
            }
        }
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(results_csv(&rows), results_csv(&again));
    }

    #[test]
    fn rows_are_sorted() {
        let cfg = micro_config();
        let rows = run_experiment(&cfg).unwrap();
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.strategy.as_str(), r.k, r.objective.as_str(), r.seed))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn csv_formats_aborted_rows() {
        let rows = vec![
            ExperimentRow {
                strategy: StrategyTag::Low,
                k: 4,
                objective: Objective::Kl,
                seed: 0,
                metrics: Some(CellMetrics {
                    mrr10: 0.5,
                    ndcg10: 0.25,
                    recall_n: 1.0,
                    final_loss: 0.125,
                }),
            },
            ExperimentRow {
                strategy: StrategyTag::Mid,
                k: 8,
                objective: Objective::MarginMse,
                seed: 3,
                metrics: None,
            },
        ];
        let csv = results_csv(&rows);
        assert_eq!(
            csv,
            "strategy,k,objective,seed,mrr10,ndcg10,recall_n,final_loss,status\n\
             low,4,kl,0,0.500000,0.250000,1.000000,0.125000,ok\n\
             mid,8,margin_mse,3,,,,,aborted\n"
        );
    }
}
