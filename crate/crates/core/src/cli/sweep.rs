//! Cartesian sweeps over the scenario grid and the cross-configuration
//! factor table.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::artifacts;
use super::config::{apply_entries, parse_document};
use crate::domain::{Distribution, ScenarioConfig, CARDINALITY_GRID, COMPLEXITY_GRID};
use crate::error::{Error, Result};
use crate::invariants::{check_batch, worst, Finding, Status};
use crate::montecarlo::{run_batch, Batch, BatchResult, Metric};
use crate::simulator::config_digest;
use crate::strategies::StrategyKind;

/// Values per varied dimension plus the fixed base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ScenarioConfig,
    pub distribution: Vec<Distribution>,
    pub workload_executions: Vec<u32>,
    pub multi_type_share: Vec<f64>,
    pub cardinality_n: Vec<u32>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            base: ScenarioConfig::default(),
            distribution: vec![Distribution::Uniform, Distribution::Pareto],
            workload_executions: vec![1, 2, 4],
            multi_type_share: COMPLEXITY_GRID.to_vec(),
            cardinality_n: CARDINALITY_GRID.to_vec(),
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub distribution: Distribution,
    pub workload_executions: u32,
    pub multi_type_share: f64,
    pub cardinality_n: u32,
}

impl SweepCell {
    pub fn of(config: &ScenarioConfig) -> Self {
        SweepCell {
            distribution: config.distribution,
            workload_executions: config.workload_executions,
            multi_type_share: config.multi_type_share,
            cardinality_n: config.cardinality_n,
        }
    }

    pub fn apply(&self, base: &ScenarioConfig) -> ScenarioConfig {
        ScenarioConfig {
            distribution: self.distribution,
            workload_executions: self.workload_executions,
            multi_type_share: self.multi_type_share,
            cardinality_n: self.cardinality_n,
            ..base.clone()
        }
        .resolved()
    }
}

impl fmt::Display for SweepCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} x{} multi={} 1:{}",
            self.distribution, self.workload_executions, self.multi_type_share, self.cardinality_n
        )
    }
}

fn list<T: for<'de> Deserialize<'de>>(value: Value) -> Result<Vec<T>> {
    let value = match value {
        Value::Array(_) => value,
        other => Value::Array(vec![other]),
    };
    serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))
}

impl SweepSpec {
    /// Parses a sweep document. The four grid keys take lists; every other
    /// key sets the base config.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SweepSpec::default();
        let mut rest = Map::new();
        for (k, v) in parse_document(text)? {
            match k.rsplit('.').next().unwrap_or(&k) {
                "distribution" => spec.distribution = list(v)?,
                "workload_executions" => spec.workload_executions = list(v)?,
                "multi_type_share" => spec.multi_type_share = list(v)?,
                "cardinality_n" => spec.cardinality_n = list(v)?,
                _ => {
                    rest.insert(k, v);
                }
            }
        }
        spec.base = apply_entries(&ScenarioConfig::default(), &rest)?;
        Ok(spec)
    }

    /// A sweep containing exactly the given configuration.
    pub fn single(config: &ScenarioConfig) -> Self {
        let c = SweepCell::of(config);
        SweepSpec {
            base: config.clone(),
            distribution: vec![c.distribution],
            workload_executions: vec![c.workload_executions],
            multi_type_share: vec![c.multi_type_share],
            cardinality_n: vec![c.cardinality_n],
        }
    }

    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &distribution in &self.distribution {
            for &workload_executions in &self.workload_executions {
                for &multi_type_share in &self.multi_type_share {
                    for &cardinality_n in &self.cardinality_n {
                        out.push(SweepCell {
                            distribution,
                            workload_executions,
                            multi_type_share,
                            cardinality_n,
                        });
                    }
                }
            }
        }
        out
    }

    /// The reference cell: every dimension at its base value.
    pub fn default_cell(&self) -> SweepCell {
        SweepCell::of(&self.base)
    }

    /// Transitions reported in the factor table: for each dimension with at
    /// least two values, first value to last value with the other dimensions
    /// at the base.
    pub fn transitions(&self) -> Vec<(&'static str, SweepCell, SweepCell)> {
        let d = self.default_cell();
        let mut out = Vec::new();
        if let (Some(a), Some(b)) = (self.distribution.first(), self.distribution.last()) {
            if self.distribution.len() > 1 {
                out.push((
                    "distribution",
                    SweepCell {
                        distribution: *a,
                        ..d
                    },
                    SweepCell {
                        distribution: *b,
                        ..d
                    },
                ));
            }
        }
        if self.workload_executions.len() > 1 {
            let (a, b) = (
                self.workload_executions[0],
                *self.workload_executions.last().unwrap(),
            );
            out.push((
                "workload_executions",
                SweepCell {
                    workload_executions: a,
                    ..d
                },
                SweepCell {
                    workload_executions: b,
                    ..d
                },
            ));
        }
        if self.multi_type_share.len() > 1 {
            let (a, b) = (
                self.multi_type_share[0],
                *self.multi_type_share.last().unwrap(),
            );
            out.push((
                "multi_type_share",
                SweepCell {
                    multi_type_share: a,
                    ..d
                },
                SweepCell {
                    multi_type_share: b,
                    ..d
                },
            ));
        }
        if self.cardinality_n.len() > 1 {
            let (a, b) = (self.cardinality_n[0], *self.cardinality_n.last().unwrap());
            out.push((
                "cardinality_n",
                SweepCell {
                    cardinality_n: a,
                    ..d
                },
                SweepCell {
                    cardinality_n: b,
                    ..d
                },
            ));
        }
        out
    }
}

/// Per-configuration result kept in memory after a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub cell: SweepCell,
    pub config_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub summary: Option<BatchResult>,
}

impl CellReport {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Runs every configuration of `spec`, calling `visit` with each completed
/// batch before it is dropped. Errors are recorded per cell.
pub fn run_sweep_with<F>(
    spec: &SweepSpec,
    strategies: &[StrategyKind],
    mut visit: F,
) -> Vec<CellReport>
where
    F: FnMut(&SweepCell, &ScenarioConfig, &Batch, &[Finding]) -> Result<()>,
{
    spec.cells()
        .into_iter()
        .map(|cell| {
            let config = cell.apply(&spec.base);
            let digest = config_digest(&config);
            let outcome = run_batch(
                &config,
                strategies,
                config.effective_runs(),
                config.master_seed,
            )
            .and_then(|batch| {
                let findings = check_batch(&config, &batch.summary, &batch.runs);
                visit(&cell, &config, &batch, &findings)?;
                Ok((batch.summary, worst(&findings)))
            });
            match outcome {
                Ok((summary, status)) => CellReport {
                    cell,
                    config_digest: digest,
                    status: Some(status),
                    error: None,
                    summary: Some(summary),
                },
                Err(e) => CellReport {
                    cell,
                    config_digest: digest,
                    status: None,
                    error: Some(e.to_string()),
                    summary: None,
                },
            }
        })
        .collect()
}

/// In-memory sweep without persistence.
pub fn run_sweep(spec: &SweepSpec, strategies: &[StrategyKind]) -> Vec<CellReport> {
    run_sweep_with(spec, strategies, |_, _, _, _| Ok(()))
}

/// Runs the sweep and writes one artifact folder per configuration plus
/// `sweep.json` and `factor_table.csv` at the root.
pub fn write_sweep(
    spec: &SweepSpec,
    strategies: &[StrategyKind],
    out: &Path,
) -> Result<Vec<CellReport>> {
    let reports = run_sweep_with(spec, strategies, |_, config, batch, findings| {
        artifacts::write_batch(
            &out.join(config_digest(config)),
            config,
            strategies,
            batch,
            findings,
        )
        .map(|_| ())
    });
    let table = factor_table(spec, &reports);
    let index = SweepIndex {
        tool_version: crate::TOOL_VERSION.to_string(),
        spec: spec.clone(),
        cells: reports.clone(),
        factor_table: table.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&index)?;
    bytes.push(b'\n');
    let path = out.join(SWEEP_FILE);
    std::fs::write(&path, bytes)
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    write_factor_csv(&out.join(FACTOR_CSV), &table)?;
    Ok(reports)
}

pub const SWEEP_FILE: &str = "sweep.json";
pub const FACTOR_CSV: &str = "factor_table.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepIndex {
    pub tool_version: String,
    pub spec: SweepSpec,
    pub cells: Vec<CellReport>,
    pub factor_table: Vec<FactorRow>,
}

/// One (transition, strategy) line. Values are batch means at the final
/// release: cumulated cost in USD and mean access latency in ms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRow {
    pub dimension: String,
    pub from: String,
    pub to: String,
    pub strategy: StrategyKind,
    pub cost_from: f64,
    pub cost_to: f64,
    pub cost_factor: f64,
    pub latency_from: f64,
    pub latency_to: f64,
    pub latency_factor: f64,
    /// Cost relative to eager in the same configuration.
    pub cost_vs_eager_from: f64,
    pub cost_vs_eager_to: f64,
    /// Cost relative to the reference configuration.
    pub cost_vs_default_from: f64,
    pub cost_vs_default_to: f64,
}

fn final_mean(summary: &BatchResult, kind: StrategyKind, metric: Metric) -> Option<f64> {
    let s = summary.strategy(kind)?;
    Some(s.releases.last()?.get(metric).mean)
}

fn dimension_value(dimension: &str, c: &SweepCell) -> String {
    match dimension {
        "distribution" => c.distribution.to_string(),
        "workload_executions" => c.workload_executions.to_string(),
        "multi_type_share" => c.multi_type_share.to_string(),
        _ => format!("1:{}", c.cardinality_n),
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        f64::NAN
    } else {
        a / b
    }
}

/// Builds the factor table from completed sweep cells. Transitions whose
/// endpoints are missing or failed are skipped.
pub fn factor_table(spec: &SweepSpec, reports: &[CellReport]) -> Vec<FactorRow> {
    let find = |c: &SweepCell| {
        reports
            .iter()
            .find(|r| r.cell == *c)
            .and_then(|r| r.summary.as_ref())
    };
    let default = find(&spec.default_cell());
    let mut rows = Vec::new();
    for (dimension, from, to) in spec.transitions() {
        let (Some(a), Some(b)) = (find(&from), find(&to)) else {
            continue;
        };
        for s in &a.strategies {
            let kind = s.strategy;
            let cost =
                |x: &BatchResult, k| final_mean(x, k, Metric::CumulatedCost).unwrap_or(f64::NAN);
            let lat =
                |x: &BatchResult| final_mean(x, kind, Metric::MeanLatency).unwrap_or(f64::NAN);
            let d_cost = default.map_or(f64::NAN, |d| cost(d, kind));
            let (ca, cb) = (cost(a, kind), cost(b, kind));
            rows.push(FactorRow {
                dimension: dimension.to_string(),
                from: dimension_value(dimension, &from),
                to: dimension_value(dimension, &to),
                strategy: kind,
                cost_from: ca,
                cost_to: cb,
                cost_factor: ratio(cb, ca),
                latency_from: lat(a),
                latency_to: lat(b),
                latency_factor: ratio(lat(b), lat(a)),
                cost_vs_eager_from: ratio(ca, cost(a, StrategyKind::Eager)),
                cost_vs_eager_to: ratio(cb, cost(b, StrategyKind::Eager)),
                cost_vs_default_from: ratio(ca, d_cost),
                cost_vs_default_to: ratio(cb, d_cost),
            });
        }
    }
    rows
}

pub fn write_factor_csv(path: &Path, rows: &[FactorRow]) -> Result<()> {
    let to_err = |e: csv::Error| Error::InvalidConfig(format!("writing {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    for r in rows {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush()
        .map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Exit status of a finished sweep: any failed cell or Red finding is fatal.
pub fn sweep_status(reports: &[CellReport]) -> Status {
    if reports.iter().any(|r| r.failed()) {
        return Status::Red;
    }
    reports
        .iter()
        .filter_map(|r| r.status)
        .max()
        .unwrap_or(Status::Green)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_size() {
        assert_eq!(SweepSpec::default().cells().len(), 90);
        assert_eq!(SweepSpec::default().transitions().len(), 4);
    }

    #[test]
    fn parse_lists_and_base() {
        let s = SweepSpec::parse("distribution = uniform\ncardinality_n = 1, 25\nreleases = 3\n")
            .unwrap();
        assert_eq!(s.distribution, vec![Distribution::Uniform]);
        assert_eq!(s.cardinality_n, vec![1, 25]);
        assert_eq!(s.base.releases, 3);
        assert_eq!(s.cells().len(), 2 * 3 * 5);
    }

    #[test]
    fn single_cell_matches_config() {
        let c = ScenarioConfig::default();
        let s = SweepSpec::single(&c);
        assert_eq!(s.cells().len(), 1);
        assert_eq!(s.cells()[0].apply(&s.base), c.resolved());
    }
}
