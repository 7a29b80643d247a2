//! One simulated run: a fixed number of releases, each executed as
//! workload → SMO → on-release migration → smoothing decay → growth.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::costing::{
    money_micro, price_to_micro, release_latency_stats, IoLedger, LatencyModel, Money,
};
use crate::domain::{ScenarioConfig, SchemaCatalog, Smo};
use crate::error::{Error, Result};
use crate::evolution::{apply_smo_to_catalog, sample_smo};
use crate::rng::{derive_run_seed, SimRng, StreamLabel};
use crate::store::{grow_population, seed_population, EntityStore};
use crate::strategies::{MigrationStrategy, StrategyKind};
use crate::workload::{execute_workload, SmoothingTracker};

/// Stable digest of the resolved configuration (hex, 16 chars).
pub fn config_digest(config: &ScenarioConfig) -> String {
    let canonical = serde_json::to_vec(&config.resolved()).expect("config serializes");
    let hash = Sha256::digest(&canonical);
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct Streams {
    pub population: SimRng,
    pub workload: SimRng,
    pub evolution: SimRng,
    pub jitter: SimRng,
}

impl Streams {
    pub fn new(run_seed: u64) -> Self {
        Streams {
            population: SimRng::substream(run_seed, StreamLabel::Population),
            workload: SimRng::substream(run_seed, StreamLabel::Workload),
            evolution: SimRng::substream(run_seed, StreamLabel::Evolution),
            jitter: SimRng::substream(run_seed, StreamLabel::Jitter),
        }
    }
}

/// Mutable state of one run.
#[derive(Debug, Clone)]
pub struct RunState {
    pub config: ScenarioConfig,
    pub catalog: SchemaCatalog,
    pub store: EntityStore,
    pub ledger: IoLedger,
    pub tracker: SmoothingTracker,
    pub latency: LatencyModel,
    pub streams: Streams,
    /// Replay each migration against the entity's own property set.
    pub verify: bool,
    price_micro: u128,
    cumulated_io: u64,
    cumulated_cost: Money,
}

impl RunState {
    pub fn new(config: &ScenarioConfig, run_seed: u64) -> Self {
        let catalog = SchemaCatalog::new();
        let mut streams = Streams::new(run_seed);
        let store = seed_population(config, &catalog, &mut streams.population);
        RunState {
            config: config.clone(),
            catalog,
            store,
            ledger: IoLedger::empty(),
            tracker: SmoothingTracker::new(config.smoothing_alpha),
            latency: LatencyModel::from_config(config),
            streams,
            verify: cfg!(debug_assertions),
            price_micro: price_to_micro(config.price_per_million_io),
            cumulated_io: 0,
            cumulated_cost: Money(0),
        }
    }

    pub fn money(&self, io: u64) -> Money {
        money_micro(io, self.price_micro, self.config.scale_factor)
    }
}

/// Snapshot taken at the end of a release.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseMetrics {
    pub release_no: u32,
    pub smo: Smo,
    pub accesses: u64,
    pub on_read_reads: u64,
    pub on_read_writes: u64,
    pub on_release_reads: u64,
    pub on_release_writes: u64,
    pub on_read_io: u64,
    pub on_release_io: u64,
    pub cumulated_io: u64,
    /// Money fields are pico-USD.
    pub on_read_cost: Money,
    pub on_release_cost: Money,
    pub cumulated_cost: Money,
    pub mean_latency_ms: f64,
    pub median_latency_ms: f64,
    pub p75_latency_ms: f64,
    pub min_latency_ms: f64,
    pub max_latency_ms: f64,
    pub population: u64,
    pub stale_count: u64,
    pub conformance_violations: u64,
    pub event_order_ok: bool,
}

/// Executes release `release_no` and returns its metrics.
pub fn run_release(
    state: &mut RunState,
    strategy: &dyn MigrationStrategy,
    release_no: u32,
) -> Result<ReleaseMetrics> {
    state.ledger.begin_release(release_no);

    let log = execute_workload(state, strategy, release_no)?;

    let smo = sample_smo(
        &mut state.streams.evolution,
        state.config.multi_type_share,
        &mut state.catalog,
        release_no,
    );
    apply_smo_to_catalog(&mut state.catalog, &smo)?;

    strategy.on_release(state, &smo, release_no)?;

    state.tracker.decay_all();

    grow_population(
        &mut state.store,
        &state.catalog,
        state.config.growth_rate,
        state.config.cardinality_n,
        state.config.pareto_hot_fraction,
        &mut state.streams.population,
    );

    let conformance_violations = state
        .store
        .entities()
        .iter()
        .filter(|e| !e.conforms_to(&state.catalog))
        .count() as u64;
    if conformance_violations > 0 && state.verify {
        return Err(Error::Consistency(format!(
            "{conformance_violations} entities violate their schema version after release {release_no}"
        )));
    }

    let rec = *state.ledger.current().expect("release opened");
    let on_read_io = rec.on_read_io();
    let on_release_io = rec.on_release_io();
    state.cumulated_io += on_read_io + on_release_io;
    let on_read_cost = state.money(on_read_io);
    let on_release_cost = state.money(on_release_io);
    state.cumulated_cost += on_read_cost + on_release_cost;
    let lat = release_latency_stats(&log.latencies());

    Ok(ReleaseMetrics {
        release_no,
        smo,
        accesses: log.accesses.len() as u64,
        on_read_reads: rec.on_read_reads,
        on_read_writes: rec.on_read_writes,
        on_release_reads: rec.on_release_reads,
        on_release_writes: rec.on_release_writes,
        on_read_io,
        on_release_io,
        cumulated_io: state.cumulated_io,
        on_read_cost,
        on_release_cost,
        cumulated_cost: state.cumulated_cost,
        mean_latency_ms: lat.mean,
        median_latency_ms: lat.median,
        p75_latency_ms: lat.p75,
        min_latency_ms: lat.min,
        max_latency_ms: lat.max,
        population: state.store.len() as u64,
        stale_count: state.store.stale_count(&state.catalog),
        conformance_violations,
        event_order_ok: state.ledger.event_order_ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub strategy: StrategyKind,
    pub run_index: usize,
    pub seed: u64,
    pub config_digest: String,
    pub final_population: u64,
    pub releases: Vec<ReleaseMetrics>,
}

impl RunResult {
    pub fn last(&self) -> Option<&ReleaseMetrics> {
        self.releases.last()
    }
}

/// Runs all releases of `config` under `strategy` from `seed`.
pub fn run_scenario(
    config: &ScenarioConfig,
    strategy: StrategyKind,
    seed: u64,
) -> Result<RunResult> {
    run_with_index(config, strategy, 0, seed, &config_digest(config))
}

/// Like [`run_scenario`] with the run index and digest recorded.
pub fn run_with_index(
    config: &ScenarioConfig,
    strategy: StrategyKind,
    run_index: usize,
    seed: u64,
    digest: &str,
) -> Result<RunResult> {
    let policy = strategy.build(config);
    let mut state = RunState::new(config, seed);
    let releases = (1..=config.releases)
        .map(|r| run_release(&mut state, policy.as_ref(), r))
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResult {
        strategy,
        run_index,
        seed,
        config_digest: digest.to_string(),
        final_population: state.store.len() as u64,
        releases,
    })
}

/// Seed of run `run_index` in a batch.
pub fn run_seed(master_seed: u64, run_index: usize) -> u64 {
    derive_run_seed(master_seed, run_index as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::affected_types;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn first_release_eager() {
        let r = run_scenario(
            &ScenarioConfig {
                releases: 1,
                ..cfg()
            },
            StrategyKind::Eager,
            1,
        )
        .unwrap();
        let m = &r.releases[0];
        assert_eq!(m.population, 1100);
        assert_eq!(m.on_read_io, 0);
        assert_eq!(m.stale_count, 0);
    }

    #[test]
    fn first_release_lazy_leaves_affected_types_stale() {
        let c = ScenarioConfig {
            releases: 1,
            ..cfg()
        };
        let r = run_scenario(&c, StrategyKind::Lazy, 3).unwrap();
        let m = &r.releases[0];
        assert_eq!(m.on_release_io, 0);
        assert_eq!(m.on_read_io, 0, "workload precedes the first SMO");
        let counts = crate::store::allocate_population(1000, 1);
        let expected: u64 = affected_types(&m.smo)
            .iter()
            .map(|t| counts[t.index()])
            .sum();
        assert_eq!(m.stale_count, expected);
    }

    #[test]
    fn no_workload_lazy_is_free() {
        let c = ScenarioConfig {
            workload_executions: 0,
            ..cfg()
        };
        let r = run_scenario(&c, StrategyKind::Lazy, 5).unwrap();
        assert!(r
            .releases
            .iter()
            .all(|m| m.on_read_io == 0 && m.on_release_io == 0 && m.accesses == 0));
    }

    #[test]
    fn zero_releases() {
        let c = ScenarioConfig {
            releases: 0,
            ..cfg()
        };
        assert!(run_scenario(&c, StrategyKind::Eager, 1)
            .unwrap()
            .releases
            .is_empty());
    }

    #[test]
    fn deterministic_bytes() {
        let a = serde_json::to_vec(&run_scenario(&cfg(), StrategyKind::Predictive, 77).unwrap())
            .unwrap();
        let b = serde_json::to_vec(&run_scenario(&cfg(), StrategyKind::Predictive, 77).unwrap())
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eager_totals() {
        let r = run_scenario(&cfg(), StrategyKind::Eager, 9).unwrap();
        let last = r.last().unwrap();
        assert!(last.cumulated_cost > Money(0));
        assert!(r.releases.iter().all(|m| m.on_read_cost == Money(0)));
        assert!(r
            .releases
            .iter()
            .all(|m| m.min_latency_ms == 4.2 && m.max_latency_ms == 4.2));
    }

    #[test]
    fn digest_ignores_unresolved_runs_field() {
        let a = cfg();
        let b = ScenarioConfig {
            runs: Some(40),
            ..cfg()
        };
        assert_eq!(config_digest(&a), config_digest(&b));
        let c = ScenarioConfig {
            runs: Some(41),
            ..cfg()
        };
        assert_ne!(config_digest(&a), config_digest(&c));
    }
}
