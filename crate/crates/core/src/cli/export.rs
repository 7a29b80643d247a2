//! Plot-ready CSV projections of persisted batches. Nothing here simulates.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::artifacts;
use crate::error::{Error, Result};
use crate::montecarlo::{BatchResult, Metric};
use crate::strategies::StrategyKind;

pub const EXPORT_DIR: &str = "exports";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    CostCurves,
    LatencyCurves,
    Boxplot,
    Convergence,
}

impl Figure {
    pub const ALL: [Figure; 4] = [
        Figure::CostCurves,
        Figure::LatencyCurves,
        Figure::Boxplot,
        Figure::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::CostCurves => "cost-curves",
            Figure::LatencyCurves => "latency-curves",
            Figure::Boxplot => "boxplot",
            Figure::Convergence => "convergence",
        }
    }

    /// Metric plotted when none is requested.
    pub fn default_metric(self) -> Metric {
        match self {
            Figure::LatencyCurves => Metric::MeanLatency,
            _ => Metric::CumulatedCost,
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown figure `{s}`")))
    }
}

pub fn parse_metric(s: &str) -> Result<Metric> {
    Metric::ALL
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
}

#[derive(Serialize)]
struct CurveRow {
    release: u32,
    strategy: StrategyKind,
    mean: f64,
    median: f64,
}

#[derive(Serialize)]
struct BoxRow {
    release: u32,
    strategy: StrategyKind,
    q1: f64,
    median: f64,
    q3: f64,
    whisker_lo: f64,
    whisker_hi: f64,
    outlier_csv: String,
}

#[derive(Serialize)]
struct ConvergenceRow {
    checkpoint: usize,
    strategy: StrategyKind,
    release: u32,
    deviation: f64,
}

fn write_rows<T: Serialize>(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let to_err = |e: csv::Error| Error::InvalidConfig(format!("writing {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(to_err)?;
    w.write_record(header).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes `figure` for `summary` into `path`.
pub fn write_figure(
    path: &Path,
    summary: &BatchResult,
    figure: Figure,
    metric: Metric,
) -> Result<()> {
    let cells = summary
        .strategies
        .iter()
        .flat_map(|s| s.releases.iter().map(move |r| (s.strategy, r)));
    match figure {
        Figure::CostCurves | Figure::LatencyCurves => write_rows(
            path,
            &["release", "strategy", "mean", "median"],
            cells.map(|(strategy, r)| {
                let st = r.get(metric);
                CurveRow {
                    release: r.release_no,
                    strategy,
                    mean: st.mean,
                    median: st.median,
                }
            }),
        ),
        Figure::Boxplot => write_rows(
            path,
            &[
                "release",
                "strategy",
                "q1",
                "median",
                "q3",
                "whisker_lo",
                "whisker_hi",
                "outlier_csv",
            ],
            cells.map(|(strategy, r)| {
                let st = r.get(metric);
                BoxRow {
                    release: r.release_no,
                    strategy,
                    q1: st.q1,
                    median: st.median,
                    q3: st.q3,
                    whisker_lo: st.whisker_lo,
                    whisker_hi: st.whisker_hi,
                    outlier_csv: join(&st.outliers),
                }
            }),
        ),
        Figure::Convergence => write_rows(
            path,
            &["checkpoint", "strategy", "release", "deviation"],
            summary
                .convergence
                .iter()
                .filter(|e| e.metric == metric)
                .map(|e| ConvergenceRow {
                    checkpoint: e.checkpoint,
                    strategy: e.strategy,
                    release: e.release_no,
                    deviation: e.deviation,
                }),
        ),
    }
}

fn export_batch(dir: &Path, figure: Figure, metric: Metric) -> Result<PathBuf> {
    artifacts::read_manifest(dir)?;
    artifacts::require_runs(dir)?;
    let summary = artifacts::read_summary(dir)?;
    let out = dir.join(EXPORT_DIR);
    fs::create_dir_all(&out).map_err(|e| Error::io(format!("creating {}", out.display()), e))?;
    let path = out.join(format!("{}.csv", figure.name()));
    write_figure(&path, &summary, figure, metric)?;
    Ok(path)
}

/// Exports `figure` for the batch at `dir`, or for every batch below a sweep
/// root. Returns the files written.
pub fn export(dir: &Path, figure: Figure, metric: Option<Metric>) -> Result<Vec<PathBuf>> {
    let metric = metric.unwrap_or(figure.default_metric());
    if artifacts::is_batch_dir(dir) {
        return Ok(vec![export_batch(dir, figure, metric)?]);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|_| Error::MissingArtifact(dir.to_path_buf()))?
        .flatten()
        .map(|d| d.path())
        .filter(|p| artifacts::is_batch_dir(p))
        .collect();
    if subdirs.is_empty() {
        return Err(Error::MissingArtifact(dir.join(artifacts::SUMMARY_FILE)));
    }
    subdirs.sort();
    subdirs
        .iter()
        .map(|d| export_batch(d, figure, metric))
        .collect()
}
