//! Vocabulary types: entity types, schema modification operations, schema
//! versions, entities and the scenario configuration.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three entity types of the game data model. The derive order is the
/// fixed total order Player < Mission < Place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityTypeId {
    Player,
    Mission,
    Place,
}

impl EntityTypeId {
    pub const ALL: [EntityTypeId; 3] = [
        EntityTypeId::Player,
        EntityTypeId::Mission,
        EntityTypeId::Place,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for EntityTypeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SmoKind {
    Add,
    Delete,
    Rename,
    Copy,
    Move,
}

impl SmoKind {
    pub const SINGLE: [SmoKind; 3] = [SmoKind::Add, SmoKind::Delete, SmoKind::Rename];
    pub const MULTI: [SmoKind; 2] = [SmoKind::Copy, SmoKind::Move];

    pub fn is_multi_type(self) -> bool {
        matches!(self, SmoKind::Copy | SmoKind::Move)
    }
}

pub type PropertyName = Arc<str>;
pub type PropertySet = BTreeSet<PropertyName>;

/// A schema modification operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Smo {
    pub kind: SmoKind,
    pub source_type: EntityTypeId,
    pub dest_type: Option<EntityTypeId>,
    pub property: PropertyName,
    pub new_property: Option<PropertyName>,
    pub release_no: u32,
}

/// Multi-type SMOs only relate neighbouring types of the data model.
pub fn is_related_pair(a: EntityTypeId, b: EntityTypeId) -> bool {
    use EntityTypeId::*;
    matches!(
        (a, b),
        (Player, Mission) | (Mission, Player) | (Mission, Place) | (Place, Mission)
    )
}

impl Smo {
    pub fn is_multi_type(&self) -> bool {
        self.kind.is_multi_type()
    }

    /// Checks the structural invariants (kind/dest consistency, pair
    /// restriction, release number).
    pub fn check(&self) -> Result<()> {
        if self.release_no == 0 {
            return Err(Error::Consistency("SMO release_no must be >= 1".into()));
        }
        match (self.kind.is_multi_type(), self.dest_type) {
            (false, None) => {}
            (true, Some(dest)) => {
                if !is_related_pair(self.source_type, dest) {
                    return Err(Error::Consistency(format!(
                        "{:?} between unrelated types {} and {}",
                        self.kind, self.source_type, dest
                    )));
                }
            }
            (false, Some(_)) => {
                return Err(Error::Consistency(format!(
                    "single-type {:?} with a destination type",
                    self.kind
                )));
            }
            (true, None) => {
                return Err(Error::Consistency(format!(
                    "multi-type {:?} without a destination type",
                    self.kind
                )));
            }
        }
        let needs_new = matches!(self.kind, SmoKind::Rename | SmoKind::Copy | SmoKind::Move);
        if needs_new != self.new_property.is_some() {
            return Err(Error::Consistency(format!(
                "{:?} new_property presence mismatch",
                self.kind
            )));
        }
        Ok(())
    }

    /// Whether this SMO touches entities of type `t`.
    pub fn affects(&self, t: EntityTypeId) -> bool {
        self.source_type == t || self.dest_type == Some(t)
    }
}

impl fmt::Display for Smo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.dest_type, &self.new_property) {
            (Some(d), Some(n)) => write!(
                f,
                "{:?}({}.{} -> {}.{})",
                self.kind, self.source_type, self.property, d, n
            ),
            (None, Some(n)) => write!(
                f,
                "{:?}({}.{} -> {})",
                self.kind, self.source_type, self.property, n
            ),
            _ => write!(f, "{:?}({}.{})", self.kind, self.source_type, self.property),
        }
    }
}

/// One schema version. Property sets are shared (`Arc`) with the entities
/// that conform to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaVersion {
    pub version_no: u32,
    pub properties: [Arc<PropertySet>; 3],
    pub producing_smo: Option<Smo>,
}

impl SchemaVersion {
    pub fn properties_of(&self, t: EntityTypeId) -> &Arc<PropertySet> {
        &self.properties[t.index()]
    }
}

/// Number of properties each type starts with at version 0 (`p0`..`p9`).
pub const INITIAL_PROPERTIES: usize = 10;

/// Ordered history of schema versions.
#[derive(Debug, Clone)]
pub struct SchemaCatalog {
    versions: Vec<SchemaVersion>,
    /// Per type, the highest version whose SMO affected the type (0 if none).
    last_affecting: [u32; 3],
    next_property_no: u32,
}

impl Default for SchemaCatalog {
    fn default() -> Self {
        Self::new()
    }
}

impl SchemaCatalog {
    pub fn new() -> Self {
        let initial: PropertySet = (0..INITIAL_PROPERTIES)
            .map(|i| PropertyName::from(format!("p{i}")))
            .collect();
        let initial = Arc::new(initial);
        SchemaCatalog {
            versions: vec![SchemaVersion {
                version_no: 0,
                properties: [initial.clone(), initial.clone(), initial],
                producing_smo: None,
            }],
            last_affecting: [0; 3],
            next_property_no: INITIAL_PROPERTIES as u32,
        }
    }

    pub fn current(&self) -> &SchemaVersion {
        self.versions
            .last()
            .expect("catalog always holds version 0")
    }

    pub fn current_version(&self) -> u32 {
        self.current().version_no
    }

    pub fn version(&self, v: u32) -> Option<&SchemaVersion> {
        self.versions.get(v as usize)
    }

    pub fn versions(&self) -> &[SchemaVersion] {
        &self.versions
    }

    pub fn properties(&self, t: EntityTypeId, version_no: u32) -> Option<&Arc<PropertySet>> {
        self.version(version_no).map(|v| v.properties_of(t))
    }

    /// Highest version whose producing SMO affected `t`.
    pub fn last_affecting_version(&self, t: EntityTypeId) -> u32 {
        self.last_affecting[t.index()]
    }

    /// SMOs of versions `from+1 ..= current`.
    pub fn smos_since(&self, from: u32) -> impl Iterator<Item = &Smo> {
        self.versions[(from as usize + 1).min(self.versions.len())..]
            .iter()
            .filter_map(|v| v.producing_smo.as_ref())
    }

    /// A property name never used before in this catalog.
    pub fn fresh_property_name(&mut self) -> PropertyName {
        let n = self.next_property_no;
        self.next_property_no += 1;
        PropertyName::from(format!("p{n}"))
    }

    pub(crate) fn push(&mut self, properties: [Arc<PropertySet>; 3], smo: Smo) -> &SchemaVersion {
        let version_no = self.current_version() + 1;
        for t in EntityTypeId::ALL {
            if smo.affects(t) {
                self.last_affecting[t.index()] = version_no;
            }
        }
        self.versions.push(SchemaVersion {
            version_no,
            properties,
            producing_smo: Some(smo),
        });
        self.current()
    }

    /// Gapless numbering check.
    pub fn check(&self) -> Result<()> {
        for (i, v) in self.versions.iter().enumerate() {
            if v.version_no as usize != i {
                return Err(Error::Consistency(format!(
                    "version at index {i} numbered {}",
                    v.version_no
                )));
            }
            if (i == 0) != v.producing_smo.is_none() {
                return Err(Error::Consistency(format!(
                    "version {i} producing SMO presence mismatch"
                )));
            }
        }
        Ok(())
    }
}

pub type EntityId = u64;

#[derive(Debug, Clone, PartialEq)]
pub struct Entity {
    pub id: EntityId,
    pub etype: EntityTypeId,
    pub version_no: u32,
    pub properties: Arc<PropertySet>,
    pub hot: bool,
}

impl Entity {
    /// Property set matches the catalog for `(etype, version_no)`.
    pub fn conforms_to(&self, catalog: &SchemaCatalog) -> bool {
        match catalog.properties(self.etype, self.version_no) {
            Some(p) => Arc::ptr_eq(p, &self.properties) || **p == *self.properties,
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Uniform,
    Pareto,
}

impl FromStr for Distribution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(Distribution::Uniform),
            "pareto" => Ok(Distribution::Pareto),
            other => Err(Error::InvalidConfig(format!(
                "unknown distribution `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Distribution::Uniform => "uniform",
            Distribution::Pareto => "pareto",
        })
    }
}

/// Full parameterization of a simulated migration scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub initial_entities: u64,
    pub scale_factor: u64,
    pub growth_rate: f64,
    pub cardinality_n: u32,
    pub distribution: Distribution,
    pub pareto_hot_fraction: f64,
    pub hot_access_share: f64,
    pub workload_executions: u32,
    pub access_fraction: f64,
    pub releases: u32,
    pub multi_type_share: f64,
    pub price_per_million_io: f64,
    pub latency_base_ms: f64,
    pub latency_single_ms: f64,
    pub latency_multi_ms: f64,
    /// Uniform jitter amplitude added to every access latency; 0 disables.
    pub latency_jitter_ms: f64,
    pub incremental_schedule: Vec<u32>,
    pub prediction_fraction: f64,
    pub smoothing_alpha: f64,
    /// Relative access weight per type (Player, Mission, Place) within the
    /// hot and cold sets. All ones means entity-uniform selection.
    pub access_type_weights: [f64; 3],
    pub master_seed: u64,
    /// `None` resolves to 40, or 80 when `cardinality_n > 1`.
    pub runs: Option<usize>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            initial_entities: 1000,
            scale_factor: 10_000,
            growth_rate: 0.10,
            cardinality_n: 1,
            distribution: Distribution::Pareto,
            pareto_hot_fraction: 0.20,
            hot_access_share: 0.80,
            workload_executions: 2,
            access_fraction: 0.10,
            releases: 12,
            multi_type_share: 0.25,
            price_per_million_io: 0.2,
            latency_base_ms: 4.2,
            latency_single_ms: 1.3,
            latency_multi_ms: 2.6,
            latency_jitter_ms: 0.0,
            incremental_schedule: vec![5, 10],
            prediction_fraction: 0.30,
            smoothing_alpha: 0.5,
            access_type_weights: [1.0; 3],
            master_seed: 20_200_905,
            runs: None,
        }
    }
}

pub const CARDINALITY_GRID: [u32; 3] = [1, 10, 25];
pub const COMPLEXITY_GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl ScenarioConfig {
    pub fn effective_runs(&self) -> usize {
        self.runs
            .unwrap_or(if self.cardinality_n > 1 { 80 } else { 40 })
    }

    /// Accesses per workload execution.
    pub fn accesses_per_execution(&self) -> u64 {
        round_half_up(self.access_fraction * self.initial_entities as f64)
    }

    pub fn accesses_per_release(&self) -> u64 {
        self.workload_executions as u64 * self.accesses_per_execution()
    }

    /// Copy with `runs` pinned to its effective value.
    pub fn resolved(&self) -> ScenarioConfig {
        let mut c = self.clone();
        c.runs = Some(self.effective_runs());
        c.incremental_schedule.sort_unstable();
        c.incremental_schedule.dedup();
        c
    }
}

/// Round half away from zero for non-negative inputs.
pub fn round_half_up(x: f64) -> u64 {
    (x + 0.5).floor().max(0.0) as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

/// Lists every invariant violation of `config`. With `strict_grid`, the
/// multi-type share must also lie on the 25-point grid.
pub fn validate_config(config: &ScenarioConfig, strict_grid: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |field: &str, reason: String| {
        out.push(Violation {
            field: field.to_string(),
            reason,
        })
    };

    let fractions = [
        ("growth_rate", config.growth_rate),
        ("pareto_hot_fraction", config.pareto_hot_fraction),
        ("hot_access_share", config.hot_access_share),
        ("access_fraction", config.access_fraction),
        ("multi_type_share", config.multi_type_share),
        ("prediction_fraction", config.prediction_fraction),
    ];
    for (name, v) in fractions {
        if !(0.0..=1.0).contains(&v) {
            bad(name, format!("{v} is not a fraction in [0, 1]"));
        }
    }
    if !(config.smoothing_alpha > 0.0 && config.smoothing_alpha <= 1.0) {
        bad(
            "smoothing_alpha",
            format!("{} is not in (0, 1]", config.smoothing_alpha),
        );
    }
    if !CARDINALITY_GRID.contains(&config.cardinality_n) {
        bad(
            "cardinality_n",
            format!("{} is not one of 1, 10, 25", config.cardinality_n),
        );
    }
    if config.releases < 1 {
        bad("releases", "must be at least 1".into());
    }
    let nonneg = [
        ("price_per_million_io", config.price_per_million_io),
        ("latency_base_ms", config.latency_base_ms),
        ("latency_single_ms", config.latency_single_ms),
        ("latency_multi_ms", config.latency_multi_ms),
        ("latency_jitter_ms", config.latency_jitter_ms),
    ];
    for (name, v) in nonneg {
        if !(v >= 0.0 && v.is_finite()) {
            bad(name, format!("{v} must be a finite non-negative number"));
        }
    }
    for (i, w) in config.access_type_weights.iter().enumerate() {
        if !(*w >= 0.0 && w.is_finite()) {
            bad(
                "access_type_weights",
                format!("weight #{i} = {w} must be finite and non-negative"),
            );
        }
    }
    if config.access_type_weights.iter().all(|w| *w == 0.0) {
        bad(
            "access_type_weights",
            "at least one weight must be positive".into(),
        );
    }
    // Entries past the last release are allowed; they never fire.
    if config.incremental_schedule.contains(&0) {
        bad("incremental_schedule", "release numbers start at 1".into());
    }
    if config.runs == Some(0) {
        bad("runs", "must be at least 1".into());
    }
    if strict_grid
        && !COMPLEXITY_GRID
            .iter()
            .any(|g| (g - config.multi_type_share).abs() < 1e-12)
    {
        bad(
            "multi_type_share",
            format!(
                "{} is not on the grid 0, 0.25, 0.5, 0.75, 1",
                config.multi_type_share
            ),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        assert!(validate_config(&ScenarioConfig::default(), true).is_empty());
    }

    #[test]
    fn negative_growth_is_one_violation() {
        let c = ScenarioConfig {
            growth_rate: -0.1,
            ..Default::default()
        };
        let v = validate_config(&c, false);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "growth_rate");
    }

    #[test]
    fn off_grid_share_only_fails_strict() {
        let c = ScenarioConfig {
            multi_type_share: 0.3,
            ..Default::default()
        };
        assert!(validate_config(&c, false).is_empty());
        let v = validate_config(&c, true);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "multi_type_share");
    }

    #[test]
    fn effective_runs_rule() {
        let mut c = ScenarioConfig::default();
        assert_eq!(c.effective_runs(), 40);
        c.cardinality_n = 10;
        assert_eq!(c.effective_runs(), 80);
        c.runs = Some(3);
        assert_eq!(c.effective_runs(), 3);
    }

    #[test]
    fn entity_type_order_is_fixed() {
        assert!(EntityTypeId::Player < EntityTypeId::Mission);
        assert!(EntityTypeId::Mission < EntityTypeId::Place);
    }

    #[test]
    fn smo_pair_restriction() {
        let mut smo = Smo {
            kind: SmoKind::Copy,
            source_type: EntityTypeId::Player,
            dest_type: Some(EntityTypeId::Place),
            property: "p1".into(),
            new_property: Some("p10".into()),
            release_no: 1,
        };
        assert!(smo.check().is_err());
        smo.dest_type = Some(EntityTypeId::Mission);
        assert!(smo.check().is_ok());
        smo.kind = SmoKind::Add;
        assert!(smo.check().is_err());
    }

    #[test]
    fn version_zero_has_ten_properties_per_type() {
        let c = SchemaCatalog::new();
        for t in EntityTypeId::ALL {
            assert_eq!(c.properties(t, 0).unwrap().len(), INITIAL_PROPERTIES);
        }
        c.check().unwrap();
    }
}
