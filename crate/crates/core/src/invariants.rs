//! Traffic-light evaluation of requirements and tendencies over a batch.
//!
//! A violated requirement is Red; a tendency that fails somewhere is Yellow.
//! Everything that holds everywhere is Green. Inapplicable checks (for
//! instance T3 without a zero prediction fraction) produce no finding.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::costing::{money_micro, price_to_micro, Money};
use crate::domain::ScenarioConfig;
use crate::montecarlo::BatchResult;
use crate::simulator::{ReleaseMetrics, RunResult};
use crate::store::growth_path;
use crate::strategies::StrategyKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantKind {
    Requirement,
    Tendency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Status {
    Green,
    Yellow,
    Red,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Where a violation was observed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strategy: Option<StrategyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub release_no: Option<u32>,
}

impl Scope {
    fn cell(strategy: StrategyKind, run_index: usize, release_no: u32) -> Self {
        Scope {
            strategy: Some(strategy),
            run_index: Some(run_index),
            release_no: Some(release_no),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub id: String,
    pub kind: InvariantKind,
    pub status: Status,
    /// First offending cell, or empty when the invariant holds.
    pub scope: Scope,
    pub violations: usize,
    pub checked: usize,
    pub message: String,
}

/// Result of evaluating one invariant.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub checked: usize,
    pub violations: Vec<(Scope, String)>,
}

impl Outcome {
    fn check(&mut self, ok: bool, scope: impl FnOnce() -> Scope, detail: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.violations.push((scope(), detail()));
        }
    }
}

/// Read-only inputs shared by all checks.
pub struct CheckContext<'a> {
    pub config: &'a ScenarioConfig,
    pub batch: &'a BatchResult,
    pub runs: &'a [RunResult],
}

impl<'a> CheckContext<'a> {
    pub fn runs_of(&self, kind: StrategyKind) -> impl Iterator<Item = &'a RunResult> {
        self.runs.iter().filter(move |r| r.strategy == kind)
    }

    /// Runs grouped by run index, keyed by strategy.
    pub fn paired(&self) -> BTreeMap<usize, BTreeMap<StrategyKind, &'a RunResult>> {
        let mut m: BTreeMap<usize, BTreeMap<StrategyKind, &RunResult>> = BTreeMap::new();
        for r in self.runs {
            m.entry(r.run_index).or_default().insert(r.strategy, r);
        }
        m
    }

    fn cells(
        &self,
        kind: StrategyKind,
    ) -> impl Iterator<Item = (&'a RunResult, &'a ReleaseMetrics)> {
        self.runs_of(kind)
            .flat_map(|r| r.releases.iter().map(move |m| (r, m)))
    }
}

pub type CheckFn = fn(&CheckContext) -> Option<Outcome>;

pub struct Invariant {
    pub id: &'static str,
    pub kind: InvariantKind,
    pub description: &'static str,
    pub check: CheckFn,
}

/// Registry of invariants evaluated by [`InvariantCatalog::evaluate`].
pub struct InvariantCatalog {
    entries: Vec<Invariant>,
}

impl Default for InvariantCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl InvariantCatalog {
    pub fn empty() -> Self {
        InvariantCatalog {
            entries: Vec::new(),
        }
    }

    pub fn register(&mut self, invariant: Invariant) -> &mut Self {
        self.entries.push(invariant);
        self
    }

    pub fn entries(&self) -> &[Invariant] {
        &self.entries
    }

    pub fn builtin() -> Self {
        use InvariantKind::*;
        let mut c = Self::empty();
        c.register(Invariant {
            id: "R1",
            kind: Requirement,
            description: "eager on-read I/O is zero",
            check: r1_eager_no_on_read,
        })
        .register(Invariant {
            id: "R2",
            kind: Requirement,
            description: "lazy on-release I/O is zero",
            check: r2_lazy_no_on_release,
        })
        .register(Invariant {
            id: "R3",
            kind: Requirement,
            description: "incremental on-release I/O is zero off schedule",
            check: r3_incremental_off_schedule,
        })
        .register(Invariant {
            id: "R4",
            kind: Requirement,
            description: "population follows the rounded growth path",
            check: r4_growth_path,
        })
        .register(Invariant {
            id: "R5",
            kind: Requirement,
            description: "entities conform to their schema version",
            check: r5_conformance,
        })
        .register(Invariant {
            id: "R6",
            kind: Requirement,
            description: "cumulated I/O and cost are running sums",
            check: r6_cumulated_monotone,
        })
        .register(Invariant {
            id: "R7",
            kind: Requirement,
            description: "money equals io x scale / 1e6 x price",
            check: r7_money_exact,
        })
        .register(Invariant {
            id: "R8",
            kind: Requirement,
            description: "paired cumulated cost: lazy <= incremental, predictive <= eager",
            check: r8_paired_ordering,
        })
        .register(Invariant {
            id: "R9",
            kind: Requirement,
            description: "eager access latency equals the base constant",
            check: r9_eager_latency_constant,
        })
        .register(Invariant {
            id: "R10",
            kind: Requirement,
            description: "on-read charges precede on-release charges in each release",
            check: r10_event_order,
        })
        .register(Invariant {
            id: "R11",
            kind: Requirement,
            description: "summary statistics are well formed",
            check: r11_summary_shape,
        })
        .register(Invariant {
            id: "T1",
            kind: Tendency,
            description: "eager mean latency is the lowest",
            check: t1_eager_fastest,
        })
        .register(Invariant {
            id: "T2",
            kind: Tendency,
            description: "predictive mean latency <= lazy",
            check: t2_predictive_vs_lazy,
        })
        .register(Invariant {
            id: "T3",
            kind: Tendency,
            description: "zero prediction fraction reproduces lazy I/O",
            check: t3_zero_prediction_is_lazy,
        });
        c
    }

    pub fn evaluate(&self, ctx: &CheckContext) -> Vec<Finding> {
        self.entries
            .iter()
            .filter_map(|inv| (inv.check)(ctx).map(|o| to_finding(inv, o)))
            .collect()
    }
}

fn to_finding(inv: &Invariant, outcome: Outcome) -> Finding {
    let status = match (outcome.violations.is_empty(), inv.kind) {
        (true, _) => Status::Green,
        (false, InvariantKind::Requirement) => Status::Red,
        (false, InvariantKind::Tendency) => Status::Yellow,
    };
    let (scope, message) = match outcome.violations.first() {
        None => (
            Scope::default(),
            format!(
                "{}: holds in {} checked cells",
                inv.description, outcome.checked
            ),
        ),
        Some((scope, detail)) => (
            scope.clone(),
            format!(
                "{}: violated in {} of {} cells; first: {detail}",
                inv.description,
                outcome.violations.len(),
                outcome.checked
            ),
        ),
    };
    Finding {
        id: inv.id.to_string(),
        kind: inv.kind,
        status,
        scope,
        violations: outcome.violations.len(),
        checked: outcome.checked,
        message,
    }
}

/// Evaluates the built-in catalog.
pub fn check_batch(
    config: &ScenarioConfig,
    batch: &BatchResult,
    runs: &[RunResult],
) -> Vec<Finding> {
    InvariantCatalog::builtin().evaluate(&CheckContext {
        config,
        batch,
        runs,
    })
}

/// Highest status among `findings` (Green if empty).
pub fn worst(findings: &[Finding]) -> Status {
    findings
        .iter()
        .map(|f| f.status)
        .max()
        .unwrap_or(Status::Green)
}

fn present(ctx: &CheckContext, kind: StrategyKind) -> bool {
    ctx.runs.iter().any(|r| r.strategy == kind)
}

fn bucket_zero(
    ctx: &CheckContext,
    kind: StrategyKind,
    on_read: bool,
    skip: impl Fn(u32) -> bool,
) -> Option<Outcome> {
    if !present(ctx, kind) {
        return None;
    }
    let mut o = Outcome::default();
    for (r, m) in ctx.cells(kind).filter(|(_, m)| !skip(m.release_no)) {
        let io = if on_read {
            m.on_read_io
        } else {
            m.on_release_io
        };
        o.check(
            io == 0,
            || Scope::cell(kind, r.run_index, m.release_no),
            || format!("{io} I/O charged"),
        );
    }
    Some(o)
}

fn r1_eager_no_on_read(ctx: &CheckContext) -> Option<Outcome> {
    bucket_zero(ctx, StrategyKind::Eager, true, |_| false)
}

fn r2_lazy_no_on_release(ctx: &CheckContext) -> Option<Outcome> {
    bucket_zero(ctx, StrategyKind::Lazy, false, |_| false)
}

fn r3_incremental_off_schedule(ctx: &CheckContext) -> Option<Outcome> {
    let schedule = ctx.config.incremental_schedule.clone();
    bucket_zero(ctx, StrategyKind::Incremental, false, move |r| {
        schedule.contains(&r)
    })
}

fn r4_growth_path(ctx: &CheckContext) -> Option<Outcome> {
    let path = growth_path(
        ctx.config.initial_entities,
        ctx.config.growth_rate,
        ctx.config.releases,
    );
    let mut o = Outcome::default();
    for r in ctx.runs {
        for m in &r.releases {
            let want = path.get(m.release_no as usize - 1).copied().unwrap_or(0);
            o.check(
                m.population == want,
                || Scope::cell(r.strategy, r.run_index, m.release_no),
                || format!("population {} != {want}", m.population),
            );
        }
    }
    Some(o)
}

fn r5_conformance(ctx: &CheckContext) -> Option<Outcome> {
    let mut o = Outcome::default();
    for r in ctx.runs {
        for m in &r.releases {
            o.check(
                m.conformance_violations == 0,
                || Scope::cell(r.strategy, r.run_index, m.release_no),
                || format!("{} non-conforming entities", m.conformance_violations),
            );
        }
    }
    Some(o)
}

fn r6_cumulated_monotone(ctx: &CheckContext) -> Option<Outcome> {
    let mut o = Outcome::default();
    for r in ctx.runs {
        let mut io = 0u64;
        let mut cost = Money(0);
        for m in &r.releases {
            io += m.on_read_io + m.on_release_io;
            cost += m.on_read_cost + m.on_release_cost;
            o.check(
                m.cumulated_io == io && m.cumulated_cost == cost,
                || Scope::cell(r.strategy, r.run_index, m.release_no),
                || {
                    format!(
                        "cumulated {} I/O / {} vs running sum {io} / {cost}",
                        m.cumulated_io, m.cumulated_cost
                    )
                },
            );
        }
    }
    Some(o)
}

fn r7_money_exact(ctx: &CheckContext) -> Option<Outcome> {
    let price = price_to_micro(ctx.config.price_per_million_io);
    let scale = ctx.config.scale_factor;
    let mut o = Outcome::default();
    for r in ctx.runs {
        for m in &r.releases {
            let ok = m.on_read_cost == money_micro(m.on_read_io, price, scale)
                && m.on_release_cost == money_micro(m.on_release_io, price, scale)
                && m.cumulated_cost == money_micro(m.cumulated_io, price, scale);
            o.check(
                ok,
                || Scope::cell(r.strategy, r.run_index, m.release_no),
                || {
                    format!(
                        "cost {} does not match {} I/O",
                        m.cumulated_cost, m.cumulated_io
                    )
                },
            );
        }
    }
    Some(o)
}

fn final_io(r: &RunResult) -> u64 {
    r.last().map_or(0, |m| m.cumulated_io)
}

fn r8_paired_ordering(ctx: &CheckContext) -> Option<Outcome> {
    use StrategyKind::*;
    let mut o = Outcome::default();
    for (idx, by) in ctx.paired() {
        let (Some(e), Some(l)) = (by.get(&Eager), by.get(&Lazy)) else {
            continue;
        };
        let (e, l) = (final_io(e), final_io(l));
        for middle in [Incremental, Predictive] {
            let Some(m) = by.get(&middle) else { continue };
            let m_io = final_io(m);
            let release = ctx.config.releases;
            o.check(
                l <= m_io && m_io <= e,
                || Scope {
                    strategy: Some(middle),
                    run_index: Some(idx),
                    release_no: Some(release),
                },
                || format!("lazy {l} <= {middle} {m_io} <= eager {e} fails"),
            );
        }
    }
    (o.checked > 0).then_some(o)
}

fn r9_eager_latency_constant(ctx: &CheckContext) -> Option<Outcome> {
    if !present(ctx, StrategyKind::Eager) || ctx.config.latency_jitter_ms > 0.0 {
        return None;
    }
    let base = ctx.config.latency_base_ms;
    let mut o = Outcome::default();
    for (r, m) in ctx
        .cells(StrategyKind::Eager)
        .filter(|(_, m)| m.accesses > 0)
    {
        o.check(
            m.min_latency_ms == base && m.max_latency_ms == base,
            || Scope::cell(StrategyKind::Eager, r.run_index, m.release_no),
            || {
                format!(
                    "latency range [{}, {}] ms, base {base} ms",
                    m.min_latency_ms, m.max_latency_ms
                )
            },
        );
    }
    Some(o)
}

fn r10_event_order(ctx: &CheckContext) -> Option<Outcome> {
    let mut o = Outcome::default();
    for r in ctx.runs {
        for m in &r.releases {
            o.check(
                m.event_order_ok,
                || Scope::cell(r.strategy, r.run_index, m.release_no),
                || "on-read charge after an on-release charge".into(),
            );
        }
    }
    Some(o)
}

fn r11_summary_shape(ctx: &CheckContext) -> Option<Outcome> {
    let mut o = Outcome::default();
    let n = ctx.batch.runs;
    for s in &ctx.batch.strategies {
        for rel in &s.releases {
            for metric in crate::montecarlo::Metric::ALL {
                let st = rel.get(metric);
                let ok = st.n == n && st.q1 <= st.median && st.median <= st.q3 && st.iqr >= 0.0;
                o.check(
                    ok,
                    || Scope {
                        strategy: Some(s.strategy),
                        run_index: None,
                        release_no: Some(rel.release_no),
                    },
                    || {
                        format!(
                            "{} stats malformed (n = {}, runs = {n})",
                            metric.name(),
                            st.n
                        )
                    },
                );
            }
        }
    }
    Some(o)
}

/// Paired per-release latency comparison `left <= right` on runs that served
/// accesses.
fn latency_le(ctx: &CheckContext, left: StrategyKind, rights: &[StrategyKind]) -> Option<Outcome> {
    let mut o = Outcome::default();
    for (idx, by) in ctx.paired() {
        let Some(l) = by.get(&left) else { continue };
        for right in rights {
            let Some(r) = by.get(right) else { continue };
            for (ml, mr) in l
                .releases
                .iter()
                .zip(&r.releases)
                .filter(|(a, _)| a.accesses > 0)
            {
                o.check(
                    ml.mean_latency_ms <= mr.mean_latency_ms,
                    || Scope::cell(*right, idx, ml.release_no),
                    || {
                        format!(
                            "{left} {} ms > {right} {} ms",
                            ml.mean_latency_ms, mr.mean_latency_ms
                        )
                    },
                );
            }
        }
    }
    (o.checked > 0).then_some(o)
}

fn t1_eager_fastest(ctx: &CheckContext) -> Option<Outcome> {
    use StrategyKind::*;
    latency_le(ctx, Eager, &[Incremental, Predictive, Lazy])
}

fn t2_predictive_vs_lazy(ctx: &CheckContext) -> Option<Outcome> {
    latency_le(ctx, StrategyKind::Predictive, &[StrategyKind::Lazy])
}

fn t3_zero_prediction_is_lazy(ctx: &CheckContext) -> Option<Outcome> {
    if ctx.config.prediction_fraction != 0.0 {
        return None;
    }
    let mut o = Outcome::default();
    for (idx, by) in ctx.paired() {
        let (Some(p), Some(l)) = (
            by.get(&StrategyKind::Predictive),
            by.get(&StrategyKind::Lazy),
        ) else {
            continue;
        };
        for (mp, ml) in p.releases.iter().zip(&l.releases) {
            o.check(
                mp.on_read_io == ml.on_read_io && mp.on_release_io == ml.on_release_io,
                || Scope::cell(StrategyKind::Predictive, idx, mp.release_no),
                || {
                    format!(
                        "predictive {}+{} I/O vs lazy {}+{}",
                        mp.on_read_io, mp.on_release_io, ml.on_read_io, ml.on_release_io
                    )
                },
            );
        }
    }
    (o.checked > 0).then_some(o)
}
