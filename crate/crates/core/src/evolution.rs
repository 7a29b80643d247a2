//! SMO generation and application semantics.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::costing::{Bucket, IoLedger};
use crate::domain::{
    Entity, EntityTypeId, PropertySet, SchemaCatalog, SchemaVersion, Smo, SmoKind,
};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// I/O charged per migrated entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoCostProfile {
    pub per_entity_reads: u64,
    pub per_entity_writes: u64,
    /// Charged per destination-type entity of a multi-type step.
    pub extra_dest_reads: u64,
}

pub const SINGLE_TYPE_COST: SmoCostProfile = SmoCostProfile {
    per_entity_reads: 1,
    per_entity_writes: 1,
    extra_dest_reads: 0,
};

pub const MULTI_TYPE_COST: SmoCostProfile = SmoCostProfile {
    per_entity_reads: 1,
    per_entity_writes: 1,
    extra_dest_reads: 1,
};

impl SmoCostProfile {
    pub fn of(smo: &Smo) -> Self {
        if smo.is_multi_type() {
            MULTI_TYPE_COST
        } else {
            SINGLE_TYPE_COST
        }
    }
}

/// Delete/Rename redraws before falling back to Add.
pub const MAX_SINGLE_RETRIES: usize = 8;

const RELATED_PAIRS: [(EntityTypeId, EntityTypeId); 2] = [
    (EntityTypeId::Player, EntityTypeId::Mission),
    (EntityTypeId::Mission, EntityTypeId::Place),
];

fn pick_property(rng: &mut SimRng, props: &PropertySet) -> Option<crate::domain::PropertyName> {
    if props.is_empty() {
        return None;
    }
    props.iter().nth(rng.index(props.len())).cloned()
}

/// Draws the SMO for `release_no`.
///
/// With probability `multi_type_share` the SMO is a Copy or Move between a
/// related pair (pair and direction uniform); otherwise an Add, Delete or
/// Rename on a uniformly chosen type. Delete needs at least two properties
/// and Rename at least one, otherwise the draw is repeated; after
/// [`MAX_SINGLE_RETRIES`] failures an Add is issued. A Move that would empty
/// its source degrades to a Copy.
pub fn sample_smo(
    rng: &mut SimRng,
    multi_type_share: f64,
    catalog: &mut SchemaCatalog,
    release_no: u32,
) -> Smo {
    if rng.chance(multi_type_share) {
        let mut kind = SmoKind::MULTI[rng.index(2)];
        let (a, b) = RELATED_PAIRS[rng.index(2)];
        let (source, dest) = if rng.chance(0.5) { (b, a) } else { (a, b) };
        let props = catalog.current().properties_of(source).clone();
        if let Some(property) = pick_property(rng, &props) {
            if kind == SmoKind::Move && props.len() < 2 {
                kind = SmoKind::Copy;
            }
            return Smo {
                kind,
                source_type: source,
                dest_type: Some(dest),
                property,
                new_property: Some(catalog.fresh_property_name()),
                release_no,
            };
        }
        // Empty source: nothing to copy; fall through to a single-type SMO.
    }

    let mut last_type = EntityTypeId::Player;
    for _ in 0..MAX_SINGLE_RETRIES {
        let kind = SmoKind::SINGLE[rng.index(3)];
        let t = EntityTypeId::ALL[rng.index(3)];
        last_type = t;
        let props = catalog.current().properties_of(t).clone();
        match kind {
            SmoKind::Add => break,
            SmoKind::Delete if props.len() >= 2 => {
                let property = pick_property(rng, &props).expect("non-empty");
                return Smo {
                    kind,
                    source_type: t,
                    dest_type: None,
                    property,
                    new_property: None,
                    release_no,
                };
            }
            SmoKind::Rename if !props.is_empty() => {
                let property = pick_property(rng, &props).expect("non-empty");
                return Smo {
                    kind,
                    source_type: t,
                    dest_type: None,
                    property,
                    new_property: Some(catalog.fresh_property_name()),
                    release_no,
                };
            }
            _ => continue,
        }
    }
    Smo {
        kind: SmoKind::Add,
        source_type: last_type,
        dest_type: None,
        property: catalog.fresh_property_name(),
        new_property: None,
        release_no,
    }
}

pub fn affected_types(smo: &Smo) -> BTreeSet<EntityTypeId> {
    let mut s = BTreeSet::from([smo.source_type]);
    if let Some(d) = smo.dest_type {
        s.insert(d);
    }
    s
}

/// Number of entities an SMO touches for a population split `counts`.
pub fn affected_entity_count(smo: &Smo, counts: [u64; 3]) -> u64 {
    affected_types(smo).iter().map(|t| counts[t.index()]).sum()
}

/// Closed-form expectation of [`affected_entity_count`] under
/// [`sample_smo`] at multi-type share `c`.
pub fn expected_affected_entities(counts: [u64; 3], c: f64) -> f64 {
    let [p, m, l] = counts.map(|x| x as f64);
    let single = (p + m + l) / 3.0;
    let multi = ((p + m) + (m + l)) / 2.0;
    (1.0 - c) * single + c * multi
}

fn inconsistency(smo: &Smo, what: &str) -> Error {
    Error::Consistency(format!("{smo} at release {}: {what}", smo.release_no))
}

/// Applies `smo` to the current version and appends the resulting version.
pub fn apply_smo_to_catalog<'a>(
    catalog: &'a mut SchemaCatalog,
    smo: &Smo,
) -> Result<&'a SchemaVersion> {
    smo.check()?;
    let current = catalog.current();
    let mut sets = current.properties.clone();
    let src = smo.source_type.index();

    let mut source: PropertySet = (*sets[src]).clone();
    let has = source.contains(&smo.property);
    match smo.kind {
        SmoKind::Add => {
            if has {
                return Err(inconsistency(smo, "added property already present"));
            }
            source.insert(smo.property.clone());
        }
        SmoKind::Delete | SmoKind::Rename | SmoKind::Copy | SmoKind::Move => {
            if !has {
                return Err(inconsistency(smo, "source property missing"));
            }
        }
    }
    match smo.kind {
        SmoKind::Delete | SmoKind::Move => {
            source.remove(&smo.property);
        }
        SmoKind::Rename => {
            let new = smo.new_property.clone().expect("checked");
            if !source.insert(new) {
                return Err(inconsistency(smo, "rename target already present"));
            }
            source.remove(&smo.property);
        }
        _ => {}
    }
    if let Some(dest_t) = smo.dest_type {
        let dst = dest_t.index();
        let mut dest: PropertySet = (*sets[dst]).clone();
        if !dest.insert(smo.new_property.clone().expect("checked")) {
            return Err(inconsistency(smo, "destination property already present"));
        }
        sets[dst] = Arc::new(dest);
    }
    if smo.kind != SmoKind::Copy {
        sets[src] = Arc::new(source);
    }
    Ok(catalog.push(sets, smo.clone()))
}

/// Rewrites the property set of one entity of type `etype` for one step.
fn replay_step(props: &mut PropertySet, etype: EntityTypeId, smo: &Smo) {
    if smo.source_type == etype {
        match smo.kind {
            SmoKind::Add => {
                props.insert(smo.property.clone());
            }
            SmoKind::Delete | SmoKind::Move => {
                props.remove(&smo.property);
            }
            SmoKind::Rename => {
                props.remove(&smo.property);
                props.insert(smo.new_property.clone().unwrap());
            }
            SmoKind::Copy => {}
        }
    }
    if smo.dest_type == Some(etype) {
        props.insert(smo.new_property.clone().unwrap());
    }
}

/// Outcome of bringing one entity to the current version.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CatchUp {
    pub k_single: u32,
    pub k_multi_dest: u32,
    pub k_multi_src: u32,
    pub reads: u64,
    pub writes: u64,
}

impl CatchUp {
    pub fn migrated(&self) -> bool {
        self.k_single + self.k_multi_dest + self.k_multi_src > 0
    }

    pub fn io(&self) -> u64 {
        self.reads + self.writes
    }
}

/// Brings `entity` to the catalog's current version.
///
/// Steps whose SMO does not touch the entity's type advance the version for
/// free. If at least one step applies, the entity is fetched and rewritten
/// once (1 read + 1 write) plus one related-entity read per multi-type step in
/// which its type is the destination. The charge goes to `bucket`.
///
/// With `verify`, the entity's own property set is replayed step by step and
/// compared with the catalog.
pub fn catch_up_entity(
    entity: &mut Entity,
    catalog: &SchemaCatalog,
    ledger: &mut IoLedger,
    bucket: Bucket,
    verify: bool,
) -> Result<CatchUp> {
    let current = catalog.current();
    if entity.version_no > current.version_no {
        return Err(Error::Consistency(format!(
            "entity {} at version {} ahead of catalog {}",
            entity.id, entity.version_no, current.version_no
        )));
    }
    let mut out = CatchUp::default();
    if entity.version_no < catalog.last_affecting_version(entity.etype) {
        let mut replay = verify.then(|| (*entity.properties).clone());
        for smo in catalog
            .smos_since(entity.version_no)
            .filter(|s| s.affects(entity.etype))
        {
            if !smo.is_multi_type() {
                out.k_single += 1;
            } else if smo.dest_type == Some(entity.etype) {
                out.k_multi_dest += 1;
            } else {
                out.k_multi_src += 1;
            }
            if let Some(r) = replay.as_mut() {
                replay_step(r, entity.etype, smo);
            }
        }
        out.reads = SINGLE_TYPE_COST.per_entity_reads
            + out.k_multi_dest as u64 * MULTI_TYPE_COST.extra_dest_reads;
        out.writes = SINGLE_TYPE_COST.per_entity_writes;
        ledger.charge(bucket, out.reads, out.writes);
        if let Some(r) = replay {
            if r != **current.properties_of(entity.etype) {
                return Err(Error::Consistency(format!(
                    "entity {} ({}) diverges from catalog version {} after migration",
                    entity.id, entity.etype, current.version_no
                )));
            }
        }
    }
    entity.version_no = current.version_no;
    entity.properties = current.properties_of(entity.etype).clone();
    Ok(out)
}
