//! On-disk layout of one batch:
//!
//! ```text
//! <dir>/config.json                  resolved config, digest, seeds, tool version
//! <dir>/runs/<strategy>/run_<i>.jsonl one ReleaseMetrics per line
//! <dir>/summary.json                 BatchResult
//! <dir>/findings.json                invariant findings
//! ```

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::ScenarioConfig;
use crate::error::{Error, Result};
use crate::invariants::Finding;
use crate::montecarlo::{Batch, BatchResult};
use crate::simulator::{config_digest, ReleaseMetrics, RunResult};
use crate::strategies::StrategyKind;
use crate::TOOL_VERSION;

pub const CONFIG_FILE: &str = "config.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const FINDINGS_FILE: &str = "findings.json";
pub const RUNS_DIR: &str = "runs";

/// Contents of `config.json`. Enough to regenerate every other artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub runs: usize,
    pub strategies: Vec<StrategyKind>,
    pub run_seeds: Vec<u64>,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(config: &ScenarioConfig, strategies: &[StrategyKind], batch: &BatchResult) -> Self {
        let mut config = config.resolved();
        config.runs = Some(batch.runs);
        config.master_seed = batch.master_seed;
        Manifest {
            tool_version: TOOL_VERSION.to_string(),
            config_digest: config_digest(&config),
            master_seed: batch.master_seed,
            runs: batch.runs,
            strategies: strategies.to_vec(),
            run_seeds: batch.run_seeds.clone(),
            config,
        }
    }
}

/// A batch reloaded from disk.
#[derive(Debug, Clone)]
pub struct Stored {
    pub manifest: Manifest,
    pub summary: BatchResult,
    pub runs: Vec<RunResult>,
}

pub fn run_file(dir: &Path, strategy: StrategyKind, run_index: usize) -> PathBuf {
    dir.join(RUNS_DIR)
        .join(strategy.name())
        .join(format!("run_{run_index}.jsonl"))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.is_file() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_run(path: &Path, run: &RunResult) -> Result<()> {
    let ctx = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| Error::io(ctx(), e))?;
    let mut w = BufWriter::new(file);
    for m in &run.releases {
        serde_json::to_writer(&mut w, m)?;
        w.write_all(b"\n").map_err(|e| Error::io(ctx(), e))?;
    }
    w.flush().map_err(|e| Error::io(ctx(), e))
}

fn read_run(path: &Path) -> Result<Vec<ReleaseMetrics>> {
    let file = File::open(path).map_err(|_| Error::MissingArtifact(path.to_path_buf()))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Writes all artifacts of `batch` into `dir`.
pub fn write_batch(
    dir: &Path,
    config: &ScenarioConfig,
    strategies: &[StrategyKind],
    batch: &Batch,
    findings: &[Finding],
) -> Result<Manifest> {
    let manifest = Manifest::new(config, strategies, &batch.summary);
    create_dir(dir)?;
    for s in strategies {
        create_dir(&dir.join(RUNS_DIR).join(s.name()))?;
    }
    for run in &batch.runs {
        write_run(&run_file(dir, run.strategy, run.run_index), run)?;
    }
    write_json(&dir.join(CONFIG_FILE), &manifest)?;
    write_json(&dir.join(SUMMARY_FILE), &batch.summary)?;
    write_json(&dir.join(FINDINGS_FILE), &findings)?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    read_json(&dir.join(CONFIG_FILE))
}

pub fn read_summary(dir: &Path) -> Result<BatchResult> {
    read_json(&dir.join(SUMMARY_FILE))
}

pub fn read_findings(dir: &Path) -> Result<Vec<Finding>> {
    read_json(&dir.join(FINDINGS_FILE))
}

/// Reloads a batch written by [`write_batch`]. Every expected run file must
/// be present.
pub fn read_batch(dir: &Path) -> Result<Stored> {
    let manifest = read_manifest(dir)?;
    let summary = read_summary(dir)?;
    let mut runs = Vec::with_capacity(manifest.runs * manifest.strategies.len());
    for s in &manifest.strategies {
        for i in 0..manifest.runs {
            let releases = read_run(&run_file(dir, *s, i))?;
            runs.push(RunResult {
                strategy: *s,
                run_index: i,
                seed: manifest.run_seeds[i],
                config_digest: manifest.config_digest.clone(),
                final_population: releases
                    .last()
                    .map_or(manifest.config.initial_entities, |m| m.population),
                releases,
            });
        }
    }
    Ok(Stored {
        manifest,
        summary,
        runs,
    })
}

/// Whether `dir` looks like a batch directory.
pub fn is_batch_dir(dir: &Path) -> bool {
    dir.join(CONFIG_FILE).is_file() && dir.join(SUMMARY_FILE).is_file()
}

/// Checks that `dir/runs` exists and holds at least one run file.
pub fn require_runs(dir: &Path) -> Result<()> {
    let runs = dir.join(RUNS_DIR);
    let has_any = fs::read_dir(&runs)
        .map(|it| {
            it.flatten().any(|d| {
                fs::read_dir(d.path())
                    .map(|mut f| f.next().is_some())
                    .unwrap_or(false)
            })
        })
        .unwrap_or(false);
    if has_any {
        Ok(())
    } else {
        Err(Error::MissingArtifact(runs))
    }
}
