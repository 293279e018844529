//! Score-distribution diversity measures over a selected negative set.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io;
use crate::sampling::{StrategyTag, TrainingSample};

pub const ENTROPY_BINS: usize = 8;

/// Spread of the values: max minus min.
pub fn coverage(values: &[f64]) -> Result<f64> {
    check(values)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(max - min)
}

/// Shannon entropy (nats) of the histogram over eight equal-width bins
/// spanning the sample's own [min, max]. A zero-width range puts all mass
/// in one bin, so the entropy is zero.
pub fn entropy8(values: &[f64]) -> Result<f64> {
    check(values)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range == 0.0 {
        return Ok(0.0);
    }
    let mut counts = [0usize; ENTROPY_BINS];
    for &v in values {
        let bin = ((ENTROPY_BINS as f64 * (v - min) / range) as usize).min(ENTROPY_BINS - 1);
        counts[bin] += 1;
    }
    let n = values.len() as f64;
    let mut h = 0.0;
    for &c in &counts {
        if c > 0 {
            let p = c as f64 / n;
            h -= p * p.ln();
        }
    }
    Ok(h)
}

/// Population standard deviation (divide by n).
pub fn stddev(values: &[f64]) -> Result<f64> {
    check(values)?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

fn check(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// All three measures of one selected set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityStats {
    pub coverage: f64,
    pub entropy: f64,
    pub std: f64,
}

pub fn diversity_stats(values: &[f64]) -> Result<DiversityStats> {
    Ok(DiversityStats {
        coverage: coverage(values)?,
        entropy: entropy8(values)?,
        std: stddev(values)?,
    })
}

/// Per-strategy aggregate: each measure averaged over the queries.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub strategy: StrategyTag,
    pub k: usize,
    pub mean_coverage: f64,
    pub mean_entropy: f64,
    pub mean_std: f64,
    pub n_queries: usize,
}

/// Average the diversity measures of each sample's selected norms.
pub fn strategy_report(
    samples: &[TrainingSample],
    strategy: StrategyTag,
    k: usize,
) -> Result<StrategyReport> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let mut sum = DiversityStats {
        coverage: 0.0,
        entropy: 0.0,
        std: 0.0,
    };
    for sample in samples {
        let stats = diversity_stats(&sample.selected_norms())?;
        sum.coverage += stats.coverage;
        sum.entropy += stats.entropy;
        sum.std += stats.std;
    }
    let n = samples.len() as f64;
    Ok(StrategyReport {
        strategy,
        k,
        mean_coverage: sum.coverage / n,
        mean_entropy: sum.entropy / n,
        mean_std: sum.std / n,
        n_queries: samples.len(),
    })
}

/// Write reports as `stats.csv` in the given row order.
pub fn write_stats_csv(path: &Path, reports: &[StrategyReport]) -> Result<()> {
    let mut out = String::from("strategy,k,mean_cov,mean_ent,mean_std,n_queries\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{}\n",
            r.strategy, r.k, r.mean_coverage, r.mean_entropy, r.mean_std, r.n_queries
        ));
    }
    io::atomic_write(path, out.as_bytes())
}
