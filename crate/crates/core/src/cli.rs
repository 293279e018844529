//! Command-line surface: pool assembly, negative sampling, diversity
//! statistics, and the synthetic K-sweep experiment.
//!
//! Exit codes: 0 success, 1 data or validation error, 2 usage error.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::corpus::{assemble_pools, load_positives, load_scores, read_pools, write_pools};
use crate::diversity::{strategy_report, write_stats_csv, StrategyReport};
use crate::error::Error;
use crate::harness::{run_experiment, write_results_csv, ExperimentConfig, TrainConfig, WorldConfig};
use crate::losses::Objective;
use crate::sampling::{build_dataset, write_samples, Strategy, StrategyTag};
use crate::scores::{minmax_normalize, NormalizedPool};

/// Errors split by exit code: usage mistakes are knowable without reading
/// any data file.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "kd-sampler",
    version,
    about = "Negative sampling and distillation training-data toolkit for dense retrieval"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble per-query candidate pools from teacher scores and positives.
    Pool {
        /// Teacher score rows, JSONL: {"query_id","doc_id","score","retriever_rank"?}
        #[arg(long)]
        scores: PathBuf,
        /// Positive doc per query, JSONL: {"query_id","doc_id"}
        #[arg(long)]
        positives: PathBuf,
        /// Output pools.jsonl
        #[arg(long)]
        out: PathBuf,
    },
    /// Select K negatives per query with one strategy.
    Sample {
        /// pools.jsonl from the pool subcommand
        #[arg(long)]
        pools: PathBuf,
        /// retriever_top | reranker_top | low | mid | random | stratified
        #[arg(long)]
        strategy: String,
        /// Negatives per query
        #[arg(long)]
        k: usize,
        /// Global seed; required by the random strategy
        #[arg(long)]
        seed: Option<u64>,
        /// Output samples.jsonl
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-strategy diversity statistics of the selected score sets.
    Stats {
        /// pools.jsonl from the pool subcommand
        #[arg(long)]
        pools: PathBuf,
        /// Negatives per query
        #[arg(long)]
        k: usize,
        /// "all" or a comma-separated strategy list
        #[arg(long, default_value = "all")]
        strategies: String,
        /// Global seed; required when the list includes random
        #[arg(long)]
        seed: Option<u64>,
        /// Output stats.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthetic two-stage training sweep over (strategy, K, objective).
    Experiment {
        /// World config JSON (all WorldConfig fields)
        #[arg(long)]
        world: PathBuf,
        /// Comma-separated K values
        #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
        k: Vec<usize>,
        /// "all" or a comma-separated strategy list
        #[arg(long, default_value = "all")]
        strategies: String,
        /// "all" or a comma-separated list of kl,margin_mse
        #[arg(long, default_value = "all")]
        objectives: String,
        /// Number of independent replicates
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Cutoff for the recall column
        #[arg(long, default_value_t = 100)]
        recall_cutoff: usize,
        /// Output results.csv
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_strategies(raw: &str) -> CliResult<Vec<StrategyTag>> {
    if raw.trim() == "all" {
        return Ok(StrategyTag::ALL.to_vec());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<StrategyTag>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

fn parse_objectives(raw: &str) -> CliResult<Vec<Objective>> {
    if raw.trim() == "all" {
        return Ok(Objective::ALL.to_vec());
    }
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<Objective>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

/// Flag combinations that cannot work regardless of the data.
fn check_selection(tags: &[StrategyTag], k: usize, seed: Option<u64>) -> CliResult<()> {
    if tags.contains(&StrategyTag::Random) && seed.is_none() {
        return Err(CliError::Usage(
            "strategy \"random\" requires --seed".into(),
        ));
    }
    if tags.contains(&StrategyTag::Stratified) && k < 2 {
        return Err(CliError::Usage(format!(
            "k={k} is invalid for stratified sampling: anchor j sits at the \
             quantile p_j = (j-1)/(K-1), so K must be at least 2"
        )));
    }
    if k == 0 {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    Ok(())
}

fn load_normalized_pools(path: &Path) -> CliResult<Vec<NormalizedPool>> {
    let pools = read_pools(path)?;
    let normalized = pools
        .iter()
        .map(minmax_normalize)
        .collect::<crate::error::Result<Vec<_>>>()?;
    Ok(normalized)
}

fn print_summary(value: serde_json::Value) {
    println!("{value}");
}

fn cmd_pool(scores: &Path, positives: &Path, out: &Path) -> CliResult<()> {
    let score_rows = load_scores(scores)?;
    let positive_map = load_positives(positives)?;
    let pools = assemble_pools(&score_rows, &positive_map)?;
    write_pools(out, &pools)?;
    let n_degenerate = pools.iter().filter(|p| p.is_degenerate()).count();
    let total_size: usize = pools.iter().map(|p| p.pool_size()).sum();
    print_summary(serde_json::json!({
        "command": "pool",
        "n_queries": pools.len(),
        "mean_pool_size": total_size as f64 / pools.len().max(1) as f64,
        "n_degenerate": n_degenerate,
        "out": out,
    }));
    Ok(())
}

fn cmd_sample(
    pools: &Path,
    strategy: &str,
    k: usize,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<()> {
    let tag = strategy
        .parse::<StrategyTag>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    check_selection(&[tag], k, seed)?;
    let strategy = Strategy::from_tag(tag, seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let normalized = load_normalized_pools(pools)?;
    let dataset = build_dataset(&normalized, &strategy, k)?;
    write_samples(out, &dataset.samples, tag, k)?;
    print_summary(serde_json::json!({
        "command": "sample",
        "strategy": tag.as_str(),
        "k": k,
        "n_samples": dataset.samples.len(),
        "skipped_degenerate": dataset.skipped_degenerate,
        "out": out,
    }));
    Ok(())
}

fn cmd_stats(
    pools: &Path,
    k: usize,
    strategies: &str,
    seed: Option<u64>,
    out: &Path,
) -> CliResult<()> {
    let tags = parse_strategies(strategies)?;
    check_selection(&tags, k, seed)?;
    let normalized = load_normalized_pools(pools)?;
    let mut reports: Vec<StrategyReport> = Vec::with_capacity(tags.len());
    for &tag in &tags {
        let strategy = Strategy::from_tag(tag, seed).map_err(|e| CliError::Usage(e.to_string()))?;
        let dataset = build_dataset(&normalized, &strategy, k)?;
        reports.push(strategy_report(&dataset.samples, tag, k)?);
    }
    write_stats_csv(out, &reports)?;
    print_summary(serde_json::json!({
        "command": "stats",
        "k": k,
        "n_strategies": reports.len(),
        "n_queries": reports.first().map(|r| r.n_queries).unwrap_or(0),
        "out": out,
    }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    world: &Path,
    ks: &[usize],
    strategies: &str,
    objectives: &str,
    seeds: u64,
    recall_cutoff: usize,
    out: &Path,
) -> CliResult<()> {
    let tags = parse_strategies(strategies)?;
    let objectives = parse_objectives(objectives)?;
    for &k in ks {
        check_selection(&tags, k, Some(0))?;
    }
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be >= 1".into()));
    }
    let world_cfg = WorldConfig::from_path(world)?;
    let cfg = ExperimentConfig {
        world: world_cfg,
        train: TrainConfig::default(),
        strategies: tags,
        ks: ks.to_vec(),
        objectives,
        seeds,
        recall_cutoff,
    };
    let rows = run_experiment(&cfg)?;
    write_results_csv(out, &rows)?;
    let n_aborted = rows.iter().filter(|r| r.metrics.is_none()).count();
    print_summary(serde_json::json!({
        "command": "experiment",
        "n_rows": rows.len(),
        "n_aborted": n_aborted,
        "seeds": seeds,
        "out": out,
    }));
    Ok(())
}

impl Command {
    pub fn run(&self) -> CliResult<()> {
        match self {
            Command::Pool {
                scores,
                positives,
                out,
            } => cmd_pool(scores, positives, out),
            Command::Sample {
                pools,
                strategy,
                k,
                seed,
                out,
            } => cmd_sample(pools, strategy, *k, *seed, out),
            Command::Stats {
                pools,
                k,
                strategies,
                seed,
                out,
            } => cmd_stats(pools, *k, strategies, *seed, out),
            Command::Experiment {
                world,
                k,
                strategies,
                objectives,
                seeds,
                recall_cutoff,
                out,
            } => cmd_experiment(world, k, strategies, objectives, *seeds, *recall_cutoff, out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("kd-sampler").chain(args.iter().copied()))
    }

    #[test]
    fn subcommands_parse() {
        assert!(parse(&["pool", "--scores", "s", "--positives", "p", "--out", "o"]).is_ok());
        assert!(parse(&[
            "sample", "--pools", "p", "--strategy", "stratified", "--k", "8", "--out", "o"
        ])
        .is_ok());
        assert!(parse(&["stats", "--pools", "p", "--k", "8", "--out", "o"]).is_ok());
        assert!(parse(&["experiment", "--world", "w.json", "--out", "r.csv"]).is_ok());
    }

    #[test]
    fn missing_required_flag_is_parse_error() {
        // clap maps this to exit code 2.
        let err = parse(&["pool", "--scores", "s", "--out", "o"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn experiment_k_list_parses() {
        let cli = parse(&[
            "experiment", "--world", "w", "--k", "4,8,16", "--out", "r",
        ])
        .unwrap();
        match cli.command {
            Command::Experiment { k, .. } => assert_eq!(k, vec![4, 8, 16]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn random_without_seed_is_usage_error() {
        let err = check_selection(&[StrategyTag::Random], 4, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("--seed"));
        assert!(check_selection(&[StrategyTag::Random], 4, Some(1)).is_ok());
    }

    #[test]
    fn stratified_k1_is_usage_error_with_formula() {
        let err = check_selection(&[StrategyTag::Stratified], 1, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("(j-1)/(K-1)"));
    }

    #[test]
    fn strategy_list_parsing() {
        assert_eq!(parse_strategies("all").unwrap().len(), 6);
        assert_eq!(
            parse_strategies("low, mid").unwrap(),
            vec![StrategyTag::Low, StrategyTag::Mid]
        );
        assert!(parse_strategies("bogus").is_err());
        assert_eq!(parse_objectives("all").unwrap().len(), 2);
        assert!(parse_objectives("rank_net").is_err());
    }

    #[test]
    fn data_errors_exit_1() {
        let err = CliError::Data(Error::EmptyInput);
        assert_eq!(err.exit_code(), 1);
    }
}
