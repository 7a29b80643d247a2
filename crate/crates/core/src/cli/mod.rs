//! Command-line front end.
//!
//! Exit codes: 0 success (Green or Yellow findings), 2 a Red finding or a
//! failed sweep configuration, 1 any other error.

pub mod artifacts;
pub mod config;
pub mod export;
pub mod sweep;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::domain::{validate_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::invariants::{check_batch, worst, Finding, Status};
use crate::montecarlo::{run_batch, Metric};
use crate::simulator::config_digest;
use crate::strategies::StrategyKind;

pub const OUT_ROOT_ENV: &str = "SCHEMAEVO_OUT_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "schemaevo",
    version,
    about = "Monte Carlo simulator of NoSQL schema-evolution migration strategies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one batch of all strategies and persist the artifacts.
    Run(RunArgs),
    /// Run a grid of configurations.
    Sweep(SweepArgs),
    /// Write plot-ready CSV from stored artifacts.
    Export(ExportArgs),
    /// Re-evaluate invariants on stored artifacts.
    Check(CheckArgs),
    /// Lint a configuration without running it.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Config file (`key = value` lines or JSON).
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set distribution=uniform`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub releases: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<ScenarioConfig> {
        let base = match &self.config {
            Some(p) => config::load_config(p)?,
            None => ScenarioConfig::default(),
        };
        let mut c = config::apply_entries(&base, &config::parse_overrides(&self.overrides)?)?;
        if let Some(r) = self.runs {
            c.runs = Some(r);
        }
        if let Some(r) = self.releases {
            c.releases = r;
        }
        if let Some(s) = self.seed {
            c.master_seed = s;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory. Defaults to a folder below the output root.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = OUT_ROOT_ENV, default_value = "schemaevo-out")]
    pub out_root: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(short = 'j', long)]
    pub parallelism: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub out: OutArgs,
    /// Comma-separated subset of strategies.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<StrategyKind>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep file; grid keys take comma lists, other keys set the base config.
    #[arg(short, long)]
    pub sweep: Option<PathBuf>,
    /// Override a base config key.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Batch directory or sweep root.
    pub dir: PathBuf,
    /// cost-curves, latency-curves, boxplot or convergence.
    #[arg(short, long)]
    pub figure: export::Figure,
    /// on_read_cost, on_release_cost, cumulated_cost or mean_latency.
    #[arg(short, long, value_parser = export::parse_metric)]
    pub metric: Option<Metric>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub dir: PathBuf,
    /// Overwrite findings.json with the fresh evaluation.
    #[arg(long)]
    pub write: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Also require the multi-type share to lie on the 0/25/50/75/100% grid.
    #[arg(long)]
    pub strict_grid: bool,
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n.max(1));
    }
    let pool = b
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn ensure_valid(config: &ScenarioConfig, strict: bool) -> Result<()> {
    let v = validate_config(config, strict);
    if v.is_empty() {
        Ok(())
    } else {
        let lines: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        Err(Error::InvalidConfig(lines.join("; ")))
    }
}

fn status_code(s: Status) -> i32 {
    if s == Status::Red {
        2
    } else {
        0
    }
}

fn print_findings(findings: &[Finding]) {
    for f in findings {
        println!("{:<4} {:<6} {}", f.id, f.status, f.message);
    }
}

/// Runs one batch and writes its artifacts to `out`. Returns the findings.
pub fn run_to_dir(
    config: &ScenarioConfig,
    strategies: &[StrategyKind],
    out: &Path,
) -> Result<Vec<Finding>> {
    let config = config.resolved();
    ensure_valid(&config, false)?;
    let batch = run_batch(
        &config,
        strategies,
        config.effective_runs(),
        config.master_seed,
    )?;
    let findings = check_batch(&config, &batch.summary, &batch.runs);
    artifacts::write_batch(out, &config, strategies, &batch, &findings)?;
    Ok(findings)
}

pub fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = args.config.load()?.resolved();
    let strategies = if args.strategies.is_empty() {
        StrategyKind::ALL.to_vec()
    } else {
        args.strategies.clone()
    };
    let out = args
        .out
        .out
        .clone()
        .unwrap_or_else(|| args.out.out_root.join(config_digest(&config)));
    let findings = with_pool(args.out.parallelism, || {
        run_to_dir(&config, &strategies, &out)
    })??;
    let summary = artifacts::read_summary(&out)?;
    println!("wrote {}", out.display());
    for s in &summary.strategies {
        if let Some(r) = s.releases.last() {
            println!(
                "{:<12} release {:>3}  cumulated cost {:>12.6} USD  mean latency {:>8.3} ms",
                s.strategy.name(),
                r.release_no,
                r.cumulated_cost.mean,
                r.mean_latency.mean
            );
        }
    }
    print_findings(&findings);
    Ok(status_code(worst(&findings)))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<i32> {
    let mut spec = match &args.sweep {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::io(format!("reading {}", p.display()), e))?;
            sweep::SweepSpec::parse(&text)?
        }
        None => sweep::SweepSpec::default(),
    };
    spec.base = config::apply_entries(&spec.base, &config::parse_overrides(&args.overrides)?)?;
    for cell in spec.cells() {
        ensure_valid(&cell.apply(&spec.base), false)?;
    }
    let out = args
        .out
        .out
        .clone()
        .unwrap_or_else(|| args.out.out_root.join("sweep"));
    let reports = with_pool(args.out.parallelism, || {
        sweep::write_sweep(&spec, &StrategyKind::ALL, &out)
    })??;
    for r in &reports {
        match (&r.error, r.status) {
            (Some(e), _) => eprintln!("FAILED {} [{}]: {e}", r.cell, r.config_digest),
            (None, Some(s)) => println!("{:<6} {} [{}]", s, r.cell, r.config_digest),
            _ => {}
        }
    }
    println!(
        "wrote {} configurations to {}",
        reports.len(),
        out.display()
    );
    Ok(status_code(sweep::sweep_status(&reports)))
}

pub fn cmd_export(args: &ExportArgs) -> Result<i32> {
    for p in export::export(&args.dir, args.figure, args.metric)? {
        println!("{}", p.display());
    }
    Ok(0)
}

/// Reloads a batch directory and evaluates the invariants afresh.
pub fn check_dir(dir: &Path) -> Result<Vec<Finding>> {
    let stored = artifacts::read_batch(dir)?;
    Ok(check_batch(
        &stored.manifest.config,
        &stored.summary,
        &stored.runs,
    ))
}

pub fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let findings = check_dir(&args.dir)?;
    if args.write {
        let path = args.dir.join(artifacts::FINDINGS_FILE);
        let mut bytes = serde_json::to_vec_pretty(&findings)?;
        bytes.push(b'\n');
        std::fs::write(&path, bytes)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    }
    print_findings(&findings);
    Ok(status_code(worst(&findings)))
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<i32> {
    let config = args.config.load()?;
    let violations = validate_config(&config, args.strict_grid);
    for v in &violations {
        println!("{v}");
    }
    if violations.is_empty() {
        println!("ok {}", config_digest(&config.resolved()));
        Ok(0)
    } else {
        Ok(1)
    }
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Export(a) => cmd_export(a),
        Command::Check(a) => cmd_check(a),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
