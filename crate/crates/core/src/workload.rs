//! Entity access generation and exponential-smoothing access weights.

use serde::{Deserialize, Serialize};

use crate::domain::{Distribution, EntityId};
use crate::error::Result;
use crate::rng::SimRng;
use crate::simulator::RunState;
use crate::store::EntityStore;
use crate::strategies::MigrationStrategy;

/// Access selection parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessPattern {
    pub distribution: Distribution,
    pub hot_access_share: f64,
    pub type_weights: [f64; 3],
}

impl AccessPattern {
    fn weighted(&self) -> bool {
        self.type_weights.iter().any(|w| *w != self.type_weights[0])
    }
}

fn uniform_over(rng: &mut SimRng, ids: &[EntityId], store: &EntityStore) -> EntityId {
    if ids.is_empty() {
        rng.index(store.len()) as EntityId
    } else {
        ids[rng.index(ids.len())]
    }
}

fn draw_once(rng: &mut SimRng, pattern: &AccessPattern, store: &EntityStore) -> EntityId {
    match pattern.distribution {
        Distribution::Uniform => rng.index(store.len()) as EntityId,
        Distribution::Pareto => {
            if rng.chance(pattern.hot_access_share) {
                uniform_over(rng, store.hot_ids(), store)
            } else {
                uniform_over(rng, store.cold_ids(), store)
            }
        }
    }
}

/// Draws one accessed entity. The store must be non-empty.
///
/// Uniform picks any entity. Pareto picks a hot entity with probability
/// `hot_access_share` and a cold one otherwise; an empty side falls back to
/// all entities. Non-uniform type weights thin the draw by rejection.
pub fn sample_access(rng: &mut SimRng, pattern: &AccessPattern, store: &EntityStore) -> EntityId {
    if !pattern.weighted() {
        return draw_once(rng, pattern, store);
    }
    let max_w = pattern.type_weights.iter().cloned().fold(0.0, f64::max);
    loop {
        let id = draw_once(rng, pattern, store);
        let t = store.get(id).expect("drawn id exists").etype;
        if rng.unit() * max_w < pattern.type_weights[t.index()] {
            return id;
        }
    }
}

/// Exponential-smoothing access scores: `+alpha` per access, `×(1−alpha)` per
/// release boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingTracker {
    alpha: f64,
    weights: Vec<f64>,
}

impl SmoothingTracker {
    pub fn new(alpha: f64) -> Self {
        SmoothingTracker {
            alpha,
            weights: Vec::new(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn weight(&self, id: EntityId) -> f64 {
        self.weights.get(id as usize).copied().unwrap_or(0.0)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn update_weight(&mut self, id: EntityId) {
        let i = id as usize;
        if i >= self.weights.len() {
            self.weights.resize(i + 1, 0.0);
        }
        self.weights[i] += self.alpha;
    }

    pub fn decay_all(&mut self) {
        let keep = 1.0 - self.alpha;
        for w in &mut self.weights {
            *w *= keep;
        }
    }
}

/// The `ceil(fraction × population)` highest-weight entities, ties broken by
/// ascending id. Returned in rank order.
pub fn prediction_set(
    tracker: &SmoothingTracker,
    store: &EntityStore,
    fraction: f64,
) -> Vec<EntityId> {
    let n = store.len();
    let k = ((fraction * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    if k == 0 {
        return Vec::new();
    }
    let mut ids: Vec<EntityId> = (0..n as EntityId).collect();
    let rank = |a: &EntityId, b: &EntityId| {
        tracker
            .weight(*b)
            .total_cmp(&tracker.weight(*a))
            .then(a.cmp(b))
    };
    if k < n {
        ids.select_nth_unstable_by(k - 1, rank);
        ids.truncate(k);
    }
    ids.sort_unstable_by(rank);
    ids
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Access {
    pub entity_id: EntityId,
    pub latency_ms: f64,
    pub io_charged: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessLog {
    pub release_no: u32,
    pub accesses: Vec<Access>,
}

impl AccessLog {
    pub fn latencies(&self) -> Vec<f64> {
        self.accesses.iter().map(|a| a.latency_ms).collect()
    }

    pub fn io(&self) -> u64 {
        self.accesses.iter().map(|a| a.io_charged).sum()
    }
}

/// Serves one release's workload against `state`.
pub fn execute_workload(
    state: &mut RunState,
    strategy: &dyn MigrationStrategy,
    release_no: u32,
) -> Result<AccessLog> {
    let count = state.config.accesses_per_release();
    let pattern = AccessPattern {
        distribution: state.config.distribution,
        hot_access_share: state.config.hot_access_share,
        type_weights: state.config.access_type_weights,
    };
    let mut log = AccessLog {
        release_no,
        accesses: Vec::with_capacity(count as usize),
    };
    if state.store.is_empty() {
        return Ok(log);
    }
    for _ in 0..count {
        let id = sample_access(&mut state.streams.workload, &pattern, &state.store);
        let step = strategy.on_access(state, id)?;
        let mut latency = state
            .latency
            .access_latency(step.k_single + step.k_multi_src, step.k_multi_dest);
        if state.config.latency_jitter_ms > 0.0 {
            latency += state.streams.jitter.unit() * state.config.latency_jitter_ms;
        }
        state.tracker.update_weight(id);
        log.accesses.push(Access {
            entity_id: id,
            latency_ms: latency,
            io_charged: step.io(),
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ScenarioConfig, SchemaCatalog};
    use crate::rng::StreamLabel;
    use crate::store::seed_population;

    fn store(hot_fraction: f64) -> EntityStore {
        let cfg = ScenarioConfig {
            pareto_hot_fraction: hot_fraction,
            ..Default::default()
        };
        let mut rng = SimRng::substream(5, StreamLabel::Population);
        seed_population(&cfg, &SchemaCatalog::new(), &mut rng)
    }

    #[test]
    fn pareto_hot_share() {
        let s = store(0.2);
        let p = AccessPattern {
            distribution: Distribution::Pareto,
            hot_access_share: 0.8,
            type_weights: [1.0; 3],
        };
        let mut rng = SimRng::substream(6, StreamLabel::Workload);
        let n = 100_000;
        let hot = (0..n)
            .filter(|_| s.get(sample_access(&mut rng, &p, &s)).unwrap().hot)
            .count();
        let share = hot as f64 / n as f64;
        assert!((share - 0.8).abs() < 0.01, "{share}");
    }

    #[test]
    fn empty_hot_set_is_uniform() {
        let s = store(0.0);
        let p = AccessPattern {
            distribution: Distribution::Pareto,
            hot_access_share: 0.8,
            type_weights: [1.0; 3],
        };
        let mut rng = SimRng::substream(6, StreamLabel::Workload);
        let mut hits = vec![0u32; s.len()];
        for _ in 0..100_000 {
            hits[sample_access(&mut rng, &p, &s) as usize] += 1;
        }
        // Binomial(1e5, 1e-3): sigma ~ 10. Per-entity 3 sigma holds for ~99.7%.
        let within = hits.iter().filter(|h| (70..=130).contains(*h)).count();
        assert!(within >= 990, "{within}");
        assert!(hits.iter().all(|h| (50..=150).contains(h)));
    }

    #[test]
    fn type_weights_shift_mix() {
        let s = store(0.2);
        let p = AccessPattern {
            distribution: Distribution::Uniform,
            hot_access_share: 0.8,
            type_weights: [3.0, 1.0, 1.0],
        };
        let mut rng = SimRng::substream(8, StreamLabel::Workload);
        let n = 50_000;
        let players = (0..n)
            .filter(|_| {
                s.get(sample_access(&mut rng, &p, &s)).unwrap().etype
                    == crate::domain::EntityTypeId::Player
            })
            .count() as f64
            / n as f64;
        // 334·3 / (334·3 + 666)
        assert!((players - 0.6007).abs() < 0.015, "{players}");
    }

    #[test]
    fn smoothing_recurrence() {
        let mut t = SmoothingTracker::new(0.5);
        assert_eq!(t.weight(3), 0.0);
        t.update_weight(0);
        for _ in 0..3 {
            t.decay_all();
        }
        assert_eq!(t.weight(0), 0.0625);
    }

    #[test]
    fn recent_beats_old_heavy() {
        let mut t = SmoothingTracker::new(0.5);
        for _ in 0..10 {
            t.update_weight(0);
        }
        for _ in 0..5 {
            t.decay_all();
        }
        t.update_weight(1);
        t.update_weight(1);
        assert_eq!(t.weight(0), 0.15625);
        assert_eq!(t.weight(1), 1.0);
        assert!(t.weight(1) > t.weight(0));
    }

    #[test]
    fn prediction_set_edges() {
        let s = store(0.2);
        let mut t = SmoothingTracker::new(0.5);
        for id in [5u64, 9, 9, 400] {
            t.update_weight(id);
        }
        assert!(prediction_set(&t, &s, 0.0).is_empty());
        assert_eq!(prediction_set(&t, &s, 1.0).len(), s.len());
        let top = prediction_set(&t, &s, 0.3);
        assert_eq!(top.len(), 300);
        assert_eq!(&top[..4], &[9, 5, 400, 0]);
    }
}
