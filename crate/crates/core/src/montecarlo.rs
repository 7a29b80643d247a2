//! Seeded batches of runs and their distribution summaries.
//!
//! Quantiles use linear interpolation between closest ranks: for a sorted
//! sample `x[0..n]` and probability `p`, `h = (n − 1)·p` and the quantile is
//! `x[⌊h⌋] + (h − ⌊h⌋)·(x[⌊h⌋+1] − x[⌊h⌋])`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::ScenarioConfig;
use crate::error::{Error, Result};
use crate::simulator::{config_digest, run_seed, run_with_index, ReleaseMetrics, RunResult};
use crate::strategies::StrategyKind;

/// Quantile of an ascending sample. Panics on an empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
    pub min: f64,
    pub max: f64,
}

/// Box-plot summary. Outliers stay in the mean and median.
pub fn summarize(values: &[f64]) -> Result<Stats> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let whisker_lo = q1 - 1.5 * iqr.abs();
    let whisker_hi = q3 + 1.5 * iqr.abs();
    Ok(Stats {
        n: values.len(),
        mean: values.iter().sum::<f64>() / values.len() as f64,
        median: quantile_sorted(&sorted, 0.5),
        q1,
        q3,
        iqr,
        whisker_lo,
        whisker_hi,
        outliers: sorted
            .iter()
            .copied()
            .filter(|v| *v < whisker_lo || *v > whisker_hi)
            .collect(),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    })
}

/// Per-release quantities summarized across runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    OnReadCost,
    OnReleaseCost,
    CumulatedCost,
    MeanLatency,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::OnReadCost,
        Metric::OnReleaseCost,
        Metric::CumulatedCost,
        Metric::MeanLatency,
    ];

    /// Costs in USD, latency in ms.
    pub fn of(self, m: &ReleaseMetrics) -> f64 {
        match self {
            Metric::OnReadCost => m.on_read_cost.usd(),
            Metric::OnReleaseCost => m.on_release_cost.usd(),
            Metric::CumulatedCost => m.cumulated_cost.usd(),
            Metric::MeanLatency => m.mean_latency_ms,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::OnReadCost => "on_read_cost",
            Metric::OnReleaseCost => "on_release_cost",
            Metric::CumulatedCost => "cumulated_cost",
            Metric::MeanLatency => "mean_latency",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseSummary {
    pub release_no: u32,
    pub on_read_cost: Stats,
    pub on_release_cost: Stats,
    pub cumulated_cost: Stats,
    pub mean_latency: Stats,
}

impl ReleaseSummary {
    pub fn get(&self, metric: Metric) -> &Stats {
        match metric {
            Metric::OnReadCost => &self.on_read_cost,
            Metric::OnReleaseCost => &self.on_release_cost,
            Metric::CumulatedCost => &self.cumulated_cost,
            Metric::MeanLatency => &self.mean_latency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    pub releases: Vec<ReleaseSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub checkpoint: usize,
    pub strategy: StrategyKind,
    pub release_no: u32,
    pub metric: Metric,
    pub deviation: f64,
}

pub const DEFAULT_CHECKPOINTS: [usize; 4] = [10, 20, 40, 80];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub config_digest: String,
    pub master_seed: u64,
    pub runs: usize,
    pub run_seeds: Vec<u64>,
    pub strategies: Vec<StrategySummary>,
    pub convergence: Vec<ConvergenceEntry>,
}

impl BatchResult {
    pub fn strategy(&self, kind: StrategyKind) -> Option<&StrategySummary> {
        self.strategies.iter().find(|s| s.strategy == kind)
    }

    pub fn stats(&self, kind: StrategyKind, release_no: u32, metric: Metric) -> Option<&Stats> {
        self.strategy(kind)?
            .releases
            .iter()
            .find(|r| r.release_no == release_no)
            .map(|r| r.get(metric))
    }

    /// Digest of the serialized summary, for determinism checks.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("summary serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Summary plus the raw per-run records it was built from.
#[derive(Debug, Clone)]
pub struct Batch {
    pub summary: BatchResult,
    pub runs: Vec<RunResult>,
}

impl Batch {
    pub fn runs_of(&self, kind: StrategyKind) -> impl Iterator<Item = &RunResult> {
        self.runs.iter().filter(move |r| r.strategy == kind)
    }
}

/// Runs `runs` paired runs of every strategy. Work is spread over the
/// current rayon pool; results do not depend on its size.
pub fn run_batch(
    config: &ScenarioConfig,
    strategies: &[StrategyKind],
    runs: usize,
    master_seed: u64,
) -> Result<Batch> {
    if runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let mut resolved = config.clone();
    resolved.runs = Some(runs);
    resolved.master_seed = master_seed;
    let digest = config_digest(&resolved);

    let jobs: Vec<(usize, StrategyKind)> = (0..runs)
        .flat_map(|i| strategies.iter().map(move |s| (i, *s)))
        .collect();
    let results: Vec<RunResult> = jobs
        .par_iter()
        .map(|(i, s)| {
            run_with_index(&resolved, *s, *i, run_seed(master_seed, *i), &digest).map_err(|e| {
                Error::Run {
                    run_index: *i,
                    strategy: s.to_string(),
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<_>>()?;

    let summary = aggregate(&digest, master_seed, strategies, results.clone())?;
    Ok(Batch {
        summary,
        runs: results,
    })
}

/// Folds raw runs into a [`BatchResult`]. Input order is irrelevant.
pub fn aggregate(
    digest: &str,
    master_seed: u64,
    strategies: &[StrategyKind],
    mut runs: Vec<RunResult>,
) -> Result<BatchResult> {
    runs.sort_by(|a, b| {
        a.strategy
            .cmp(&b.strategy)
            .then(a.run_index.cmp(&b.run_index))
    });
    let n_runs = runs.iter().map(|r| r.run_index + 1).max().unwrap_or(0);
    let mut run_seeds = vec![0u64; n_runs];
    for r in &runs {
        run_seeds[r.run_index] = r.seed;
    }

    let mut out = Vec::new();
    let mut convergence = Vec::new();
    for kind in strategies {
        let mine: Vec<&RunResult> = runs.iter().filter(|r| r.strategy == *kind).collect();
        let releases = mine.first().map_or(0, |r| r.releases.len());
        let mut rel_out = Vec::with_capacity(releases);
        for idx in 0..releases {
            let column = |metric: Metric| -> Vec<f64> {
                mine.iter().map(|r| metric.of(&r.releases[idx])).collect()
            };
            let release_no = mine[0].releases[idx].release_no;
            rel_out.push(ReleaseSummary {
                release_no,
                on_read_cost: summarize(&column(Metric::OnReadCost))?,
                on_release_cost: summarize(&column(Metric::OnReleaseCost))?,
                cumulated_cost: summarize(&column(Metric::CumulatedCost))?,
                mean_latency: summarize(&column(Metric::MeanLatency))?,
            });
            for metric in Metric::ALL {
                for (checkpoint, deviation) in
                    running_mean_deviation(&column(metric), &DEFAULT_CHECKPOINTS)
                {
                    convergence.push(ConvergenceEntry {
                        checkpoint,
                        strategy: *kind,
                        release_no,
                        metric,
                        deviation,
                    });
                }
            }
        }
        out.push(StrategySummary {
            strategy: *kind,
            releases: rel_out,
        });
    }
    Ok(BatchResult {
        config_digest: digest.to_string(),
        master_seed,
        runs: n_runs,
        run_seeds,
        strategies: out,
        convergence,
    })
}

/// `|mean(first k) − mean(all)| / mean(all)` for each checkpoint `k ≤ n`.
/// With a zero overall mean the absolute deviation is reported.
pub fn running_mean_deviation(values: &[f64], checkpoints: &[usize]) -> Vec<(usize, f64)> {
    if values.is_empty() {
        return Vec::new();
    }
    let total = values.iter().sum::<f64>() / values.len() as f64;
    checkpoints
        .iter()
        .copied()
        .filter(|k| *k >= 1 && *k <= values.len())
        .map(|k| {
            let partial = values[..k].iter().sum::<f64>() / k as f64;
            let diff = (partial - total).abs();
            let dev = if total == 0.0 {
                diff
            } else {
                diff / total.abs()
            };
            (k, dev)
        })
        .collect()
}

/// Convergence entries of `batch` restricted to the given checkpoints.
pub fn convergence_report(batch: &BatchResult, checkpoints: &[usize]) -> Vec<ConvergenceEntry> {
    batch
        .convergence
        .iter()
        .filter(|e| checkpoints.contains(&e.checkpoint))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_values() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3, s.iqr), (3.0, 2.0, 4.0, 2.0));
        assert_eq!((s.whisker_lo, s.whisker_hi), (-1.0, 7.0));
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn singleton() {
        let s = summarize(&[5.0]).unwrap();
        assert_eq!(
            (s.mean, s.median, s.q1, s.q3, s.iqr, s.min, s.max),
            (5.0, 5.0, 5.0, 5.0, 0.0, 5.0, 5.0)
        );
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn collapsed_whiskers() {
        let s = summarize(&[1.0, 1.0, 1.0, 1.0, 100.0]).unwrap();
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.mean, 20.8);
    }

    #[test]
    fn empty_sample_errors() {
        assert!(matches!(summarize(&[]), Err(Error::EmptySample)));
    }

    #[test]
    fn constant_series_never_deviates() {
        let d = running_mean_deviation(&[3.0; 80], &DEFAULT_CHECKPOINTS);
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|(_, x)| *x == 0.0));
        assert_eq!(
            running_mean_deviation(&[3.0; 30], &DEFAULT_CHECKPOINTS).len(),
            2
        );
    }

    #[test]
    fn single_run_batch() {
        let cfg = ScenarioConfig {
            releases: 2,
            ..Default::default()
        };
        let b = run_batch(&cfg, &StrategyKind::ALL, 1, 4).unwrap();
        for s in &b.summary.strategies {
            for r in &s.releases {
                for m in Metric::ALL {
                    let st = r.get(m);
                    assert_eq!(st.n, 1);
                    assert_eq!(st.mean, st.median);
                    assert!(st.outliers.is_empty());
                }
            }
        }
    }
}
