//! In-memory versioned entity population.

use crate::domain::{round_half_up, Entity, EntityId, EntityTypeId, ScenarioConfig, SchemaCatalog};
use crate::rng::SimRng;

/// Splits `total` over (Player, Mission, Place) in ratio `1 : n : n²` by
/// largest-remainder apportionment. Equal remainders favour the earlier type.
pub fn allocate_population(total: u64, cardinality_n: u32) -> [u64; 3] {
    let n = cardinality_n as u128;
    let weights = [1u128, n, n * n];
    let sum: u128 = weights.iter().sum();
    let total128 = total as u128;

    let mut counts = [0u64; 3];
    let mut remainders = [(0u128, 0usize); 3];
    for (i, w) in weights.iter().enumerate() {
        let share = total128 * w;
        counts[i] = (share / sum) as u64;
        remainders[i] = (share % sum, i);
    }
    let mut left = total - counts.iter().sum::<u64>();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for (_, i) in remainders {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

/// Entities indexed by id (ids are dense, starting at 0) with per-type and
/// hot/cold partitions.
#[derive(Debug, Clone, Default)]
pub struct EntityStore {
    entities: Vec<Entity>,
    by_type: [Vec<EntityId>; 3],
    hot_ids: Vec<EntityId>,
    cold_ids: Vec<EntityId>,
}

impl EntityStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(id as usize)
    }

    pub fn get_mut(&mut self, id: EntityId) -> Option<&mut Entity> {
        self.entities.get_mut(id as usize)
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn ids_of(&self, t: EntityTypeId) -> &[EntityId] {
        &self.by_type[t.index()]
    }

    pub fn type_counts(&self) -> [u64; 3] {
        [0, 1, 2].map(|i| self.by_type[i].len() as u64)
    }

    pub fn hot_ids(&self) -> &[EntityId] {
        &self.hot_ids
    }

    pub fn cold_ids(&self) -> &[EntityId] {
        &self.cold_ids
    }

    pub fn next_id(&self) -> EntityId {
        self.entities.len() as EntityId
    }

    /// Creates one entity conforming to the catalog's current version.
    pub fn insert(&mut self, etype: EntityTypeId, hot: bool, catalog: &SchemaCatalog) -> EntityId {
        let id = self.next_id();
        let version = catalog.current();
        self.entities.push(Entity {
            id,
            etype,
            version_no: version.version_no,
            properties: version.properties_of(etype).clone(),
            hot,
        });
        self.by_type[etype.index()].push(id);
        if hot {
            self.hot_ids.push(id);
        } else {
            self.cold_ids.push(id);
        }
        id
    }

    fn spawn(
        &mut self,
        counts: [u64; 3],
        hot_fraction: f64,
        catalog: &SchemaCatalog,
        rng: &mut SimRng,
    ) {
        for t in EntityTypeId::ALL {
            for _ in 0..counts[t.index()] {
                let hot = rng.chance(hot_fraction);
                self.insert(t, hot, catalog);
            }
        }
    }

    /// Whether `id` has at least one pending SMO that affects its type.
    pub fn is_stale(&self, id: EntityId, catalog: &SchemaCatalog) -> bool {
        self.get(id)
            .is_some_and(|e| e.version_no < catalog.last_affecting_version(e.etype))
    }

    pub fn stale_count(&self, catalog: &SchemaCatalog) -> u64 {
        let marks = EntityTypeId::ALL.map(|t| catalog.last_affecting_version(t));
        self.entities
            .iter()
            .filter(|e| e.version_no < marks[e.etype.index()])
            .count() as u64
    }
}

/// Builds the initial population at schema version 0.
pub fn seed_population(
    config: &ScenarioConfig,
    catalog: &SchemaCatalog,
    rng: &mut SimRng,
) -> EntityStore {
    let mut store = EntityStore::new();
    let counts = allocate_population(config.initial_entities, config.cardinality_n);
    store.spawn(counts, config.pareto_hot_fraction, catalog, rng);
    store
}

/// Entities of `etype` that still need migration, ascending by id.
pub fn stale_entities(
    store: &EntityStore,
    catalog: &SchemaCatalog,
    etype: EntityTypeId,
) -> Vec<EntityId> {
    let mark = catalog.last_affecting_version(etype);
    store
        .ids_of(etype)
        .iter()
        .copied()
        .filter(|id| store.entities[*id as usize].version_no < mark)
        .collect()
}

/// Number of entities a growth step adds to a population of `current`.
pub fn growth_increment(current: u64, growth_rate: f64) -> u64 {
    round_half_up(growth_rate * current as f64)
}

/// Adds `round(growth_rate × population)` entities at the current schema
/// version. Returns the number created.
pub fn grow_population(
    store: &mut EntityStore,
    catalog: &SchemaCatalog,
    growth_rate: f64,
    cardinality_n: u32,
    hot_fraction: f64,
    rng: &mut SimRng,
) -> u64 {
    let added = growth_increment(store.len() as u64, growth_rate);
    store.spawn(
        allocate_population(added, cardinality_n),
        hot_fraction,
        catalog,
        rng,
    );
    added
}

/// Population after each of `releases` growth steps.
pub fn growth_path(initial: u64, growth_rate: f64, releases: u32) -> Vec<u64> {
    let mut pop = initial;
    (0..releases)
        .map(|_| {
            pop += growth_increment(pop, growth_rate);
            pop
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamLabel;

    #[test]
    fn apportionment_examples() {
        assert_eq!(allocate_population(1000, 1), [334, 333, 333]);
        assert_eq!(allocate_population(1000, 10), [9, 90, 901]);
        assert_eq!(allocate_population(1000, 25), [2, 38, 960]);
        assert_eq!(allocate_population(0, 25), [0, 0, 0]);
    }

    #[test]
    fn seed_defaults() {
        let cfg = ScenarioConfig::default();
        let cat = SchemaCatalog::new();
        let mut rng = SimRng::substream(9, StreamLabel::Population);
        let s = seed_population(&cfg, &cat, &mut rng);
        assert_eq!(s.len(), 1000);
        assert!(s.entities().iter().all(|e| e.version_no == 0));
        assert_eq!(s.type_counts(), [334, 333, 333]);
        assert_eq!(s.hot_ids().len() + s.cold_ids().len(), 1000);
    }

    #[test]
    fn zero_hot_fraction() {
        let cfg = ScenarioConfig {
            pareto_hot_fraction: 0.0,
            ..Default::default()
        };
        let mut rng = SimRng::substream(9, StreamLabel::Population);
        let s = seed_population(&cfg, &SchemaCatalog::new(), &mut rng);
        assert!(s.hot_ids().is_empty());
    }

    #[test]
    fn growth_examples() {
        let cfg = ScenarioConfig::default();
        let cat = SchemaCatalog::new();
        let mut rng = SimRng::substream(1, StreamLabel::Population);
        let mut s = seed_population(&cfg, &cat, &mut rng);
        assert_eq!(grow_population(&mut s, &cat, 0.10, 1, 0.2, &mut rng), 100);
        assert_eq!(s.len(), 1100);
        assert_eq!(grow_population(&mut s, &cat, 0.0, 1, 0.2, &mut rng), 0);
        assert_eq!(s.len(), 1100);
    }

    #[test]
    fn growth_path_golden() {
        assert_eq!(
            growth_path(1000, 0.10, 12),
            vec![1100, 1210, 1331, 1464, 1610, 1771, 1948, 2143, 2357, 2593, 2852, 3137]
        );
    }

    #[test]
    fn nothing_stale_at_version_zero() {
        let cat = SchemaCatalog::new();
        let mut rng = SimRng::substream(2, StreamLabel::Population);
        let s = seed_population(&ScenarioConfig::default(), &cat, &mut rng);
        for t in EntityTypeId::ALL {
            assert!(stale_entities(&s, &cat, t).is_empty());
        }
        assert_eq!(s.stale_count(&cat), 0);
    }
}
