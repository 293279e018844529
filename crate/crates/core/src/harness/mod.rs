//! Desk-scale synthetic training harness: world generation, pool mining,
//! two-stage student training, ranking evaluation, and the K-sweep
//! experiment.

pub mod experiment;
pub mod metrics;
pub mod train;
pub mod world;

pub use experiment::{
    run_experiment, write_results_csv, CellMetrics, ExperimentConfig, ExperimentRow,
};
pub use metrics::{evaluate, evaluate_with, mrr_at_k, ndcg_at_k, rank_docs, recall_at_n, EvalReport};
pub use train::{
    mean_distill_loss, mean_stage1_loss, stage1_contrastive, stage2_distill, DistillOutcome,
    StudentModel, TrainConfig,
};
pub use world::{gen_world, mine_pools, Matrix, SyntheticWorld, WorldConfig};
