//! I/O accounting, money conversion and the access latency model.

use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::domain::ScenarioConfig;
use crate::montecarlo::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    OnRead,
    OnRelease,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoRecord {
    pub release_no: u32,
    pub on_read_reads: u64,
    pub on_read_writes: u64,
    pub on_release_reads: u64,
    pub on_release_writes: u64,
}

impl IoRecord {
    pub fn on_read_io(&self) -> u64 {
        self.on_read_reads + self.on_read_writes
    }

    pub fn on_release_io(&self) -> u64 {
        self.on_release_reads + self.on_release_writes
    }

    pub fn total_io(&self) -> u64 {
        self.on_read_io() + self.on_release_io()
    }
}

/// Append-only per-release I/O counts.
///
/// Within a release all on-read charges must precede the first on-release
/// charge; a violation is remembered and reported by [`IoLedger::event_order_ok`].
#[derive(Debug, Clone, Default)]
pub struct IoLedger {
    records: Vec<IoRecord>,
    release_phase_started: bool,
    order_violations: u64,
}

impl IoLedger {
    pub fn new(first_release: u32) -> Self {
        let mut l = IoLedger::default();
        l.begin_release(first_release);
        l
    }

    pub fn empty() -> Self {
        IoLedger::default()
    }

    pub fn begin_release(&mut self, release_no: u32) {
        self.records.push(IoRecord {
            release_no,
            ..Default::default()
        });
        self.release_phase_started = false;
    }

    pub fn charge(&mut self, bucket: Bucket, reads: u64, writes: u64) {
        let rec = self.records.last_mut().expect("charge outside a release");
        match bucket {
            Bucket::OnRead => {
                if self.release_phase_started {
                    self.order_violations += 1;
                }
                rec.on_read_reads += reads;
                rec.on_read_writes += writes;
            }
            Bucket::OnRelease => {
                self.release_phase_started = true;
                rec.on_release_reads += reads;
                rec.on_release_writes += writes;
            }
        }
    }

    pub fn records(&self) -> &[IoRecord] {
        &self.records
    }

    pub fn current(&self) -> Option<&IoRecord> {
        self.records.last()
    }

    pub fn total_io(&self) -> u64 {
        self.records.iter().map(IoRecord::total_io).sum()
    }

    pub fn event_order_ok(&self) -> bool {
        self.order_violations == 0
    }
}

/// An amount of money in pico-USD (10⁻¹² USD). Integer so that sums are
/// exact and identical on every platform.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Money(pub u128);

impl Money {
    pub fn usd(self) -> f64 {
        self.0 as f64 / 1e12
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "USD {:.6}", self.usd())
    }
}

/// USD price rounded to whole micro-USD.
pub fn price_to_micro(price_usd: f64) -> u128 {
    (price_usd * 1e6).round().max(0.0) as u128
}

/// `io × scale / 10⁶ × price`. With the price in micro-USD the product is an
/// exact pico-USD integer.
pub fn money(io_count: u64, price_per_million_io: f64, scale_factor: u64) -> Money {
    money_micro(io_count, price_to_micro(price_per_million_io), scale_factor)
}

pub fn money_micro(io_count: u64, price_micro: u128, scale_factor: u64) -> Money {
    Money(io_count as u128 * scale_factor as u128 * price_micro)
}

/// Latency constants of the affine access model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub base_ms: f64,
    pub single_ms: f64,
    pub multi_ms: f64,
}

impl LatencyModel {
    pub fn from_config(c: &ScenarioConfig) -> Self {
        LatencyModel {
            base_ms: c.latency_base_ms,
            single_ms: c.latency_single_ms,
            multi_ms: c.latency_multi_ms,
        }
    }

    pub fn access_latency(&self, k_single: u32, k_multi_dest: u32) -> f64 {
        self.base_ms + k_single as f64 * self.single_ms + k_multi_dest as f64 * self.multi_ms
    }
}

/// Time to serve one access that applied `k_single` single-type and
/// `k_multi_dest` multi-type destination steps.
pub fn access_latency(k_single: u32, k_multi_dest: u32, config: &ScenarioConfig) -> f64 {
    LatencyModel::from_config(config).access_latency(k_single, k_multi_dest)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub empty: bool,
    pub mean: f64,
    pub median: f64,
    pub p75: f64,
    pub min: f64,
    pub max: f64,
}

/// Per-release latency summary. An empty log gives all zeros with `empty`.
pub fn release_latency_stats(latencies: &[f64]) -> LatencyStats {
    if latencies.is_empty() {
        return LatencyStats {
            empty: true,
            ..Default::default()
        };
    }
    let mut sorted = latencies.to_vec();
    sorted.sort_by(f64::total_cmp);
    LatencyStats {
        empty: false,
        mean: latencies.iter().sum::<f64>() / latencies.len() as f64,
        median: quantile_sorted(&sorted, 0.5),
        p75: quantile_sorted(&sorted, 0.75),
        min: sorted[0],
        max: sorted[sorted.len() - 1],
    }
}
