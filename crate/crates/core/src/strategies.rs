//! The four migration policies.
//!
//! Every strategy serves accesses the same way: a stale entity is caught up
//! on the fly and charged to the on-read bucket. They differ only in what
//! they migrate when a release ships.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::costing::Bucket;
use crate::domain::{EntityId, ScenarioConfig, Smo};
use crate::error::{Error, Result};
use crate::evolution::{affected_types, catch_up_entity, CatchUp};
use crate::simulator::RunState;
use crate::workload::prediction_set;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    Eager,
    Incremental,
    Predictive,
    Lazy,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::Eager,
        StrategyKind::Incremental,
        StrategyKind::Predictive,
        StrategyKind::Lazy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Eager => "eager",
            StrategyKind::Incremental => "incremental",
            StrategyKind::Predictive => "predictive",
            StrategyKind::Lazy => "lazy",
        }
    }

    /// Instantiates the policy with the settings from `config`.
    pub fn build(self, config: &ScenarioConfig) -> Box<dyn MigrationStrategy> {
        match self {
            StrategyKind::Eager => Box::new(Eager),
            StrategyKind::Lazy => Box::new(Lazy),
            StrategyKind::Incremental => Box::new(Incremental {
                schedule: config.incremental_schedule.clone(),
            }),
            StrategyKind::Predictive => Box::new(Predictive {
                fraction: config.prediction_fraction,
            }),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown strategy `{s}`")))
    }
}

/// Policy contract. Hooks never touch the smoothing tracker and consume no
/// randomness, so all strategies of a run see identical streams.
pub trait MigrationStrategy: Send + Sync {
    fn kind(&self) -> StrategyKind;

    /// Called for every served access before the entity is returned.
    fn on_access(&self, state: &mut RunState, id: EntityId) -> Result<CatchUp> {
        lazy_on_access(state, id)
    }

    /// Called after the release's SMO has been applied to the catalog.
    fn on_release(&self, state: &mut RunState, smo: &Smo, release_no: u32) -> Result<()>;
}

fn migrate(state: &mut RunState, id: EntityId, bucket: Bucket) -> Result<CatchUp> {
    let RunState {
        store,
        catalog,
        ledger,
        verify,
        ..
    } = state;
    let entity = store
        .get_mut(id)
        .ok_or_else(|| Error::Consistency(format!("unknown entity {id}")))?;
    catch_up_entity(entity, catalog, ledger, bucket, *verify)
}

/// On-the-fly catch-up charged to the on-read bucket; free for current
/// entities.
pub fn lazy_on_access(state: &mut RunState, id: EntityId) -> Result<CatchUp> {
    migrate(state, id, Bucket::OnRead)
}

fn migrate_all(state: &mut RunState) -> Result<()> {
    for id in 0..state.store.len() as EntityId {
        migrate(state, id, Bucket::OnRelease)?;
    }
    Ok(())
}

/// Migrates every entity of the SMO's affected types; everything else is
/// advanced to the new version free of charge.
pub fn eager_on_release(state: &mut RunState, smo: &Smo) -> Result<()> {
    let affected = affected_types(smo);
    for id in 0..state.store.len() as EntityId {
        let step = migrate(state, id, Bucket::OnRelease)?;
        let etype = state.store.get(id).expect("dense ids").etype;
        if step.migrated() != affected.contains(&etype) {
            return Err(Error::Consistency(format!(
                "eager release {}: entity {id} ({etype}) migration does not match the affected types",
                smo.release_no
            )));
        }
    }
    Ok(())
}

/// Full catch-up of the whole store on scheduled releases only.
pub fn incremental_on_release(
    state: &mut RunState,
    schedule: &[u32],
    release_no: u32,
) -> Result<()> {
    if schedule.contains(&release_no) {
        migrate_all(state)?;
    }
    Ok(())
}

/// Catches up the stale members of the prediction set.
pub fn predictive_on_release(state: &mut RunState, fraction: f64) -> Result<()> {
    let predicted = prediction_set(&state.tracker, &state.store, fraction);
    for id in predicted {
        if state.store.is_stale(id, &state.catalog) {
            migrate(state, id, Bucket::OnRelease)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct Eager;

impl MigrationStrategy for Eager {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Eager
    }
    fn on_release(&self, state: &mut RunState, smo: &Smo, _release_no: u32) -> Result<()> {
        eager_on_release(state, smo)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Lazy;

impl MigrationStrategy for Lazy {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Lazy
    }
    fn on_release(&self, _state: &mut RunState, _smo: &Smo, _release_no: u32) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Incremental {
    pub schedule: Vec<u32>,
}

impl MigrationStrategy for Incremental {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Incremental
    }
    fn on_release(&self, state: &mut RunState, _smo: &Smo, release_no: u32) -> Result<()> {
        incremental_on_release(state, &self.schedule, release_no)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Predictive {
    pub fraction: f64,
}

impl MigrationStrategy for Predictive {
    fn kind(&self) -> StrategyKind {
        StrategyKind::Predictive
    }
    fn on_release(&self, state: &mut RunState, _smo: &Smo, _release_no: u32) -> Result<()> {
        predictive_on_release(state, self.fraction)
    }
}
