//! Reference xApps and the slicing decision logic they share with the model
//! pipeline.

mod handover;
mod model;
mod monitor;
mod scheduling;
mod slicing;

pub use handover::{HandoverMode, HandoverXapp};
pub use model::{quantize, ModelError, PolicyModel, ValidationRecord, MIN_PASS_RATE};
pub use monitor::KpmMonitor;
pub use scheduling::{choose_scheduler, SchedulingXapp, HBF_LOAD_FRACTION};
pub use slicing::{ceil_prb, SlicingXapp};
pub use monitor::SINK as MONITOR_SINK;

use crate::a1::{A1Policy, StatementKind};
use crate::ids::{SliceId, SliceKind};
use crate::sim::WindowSample;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write;

/// Window over which objective satisfaction is judged.
pub const EVAL_WINDOW_MS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SliceObjective {
    pub kind: SliceKind,
    /// urllc: max latency_proxy_ms; embb: min bytes/s; mmtc: min packets per
    /// evaluation window.
    pub target: f64,
    /// Lower rank is served first.
    pub rank: f64,
}

impl SliceObjective {
    pub fn default_for(kind: SliceKind) -> Self {
        let target = match kind {
            SliceKind::Urllc => 10.0,
            SliceKind::Embb => 5.0e6,
            SliceKind::Mmtc => 20.0,
        };
        Self {
            kind,
            target,
            rank: kind.index() as f64,
        }
    }

    /// Name of the A1 objective statement that sets this slice's target.
    pub fn statement_name(kind: SliceKind) -> &'static str {
        match kind {
            SliceKind::Urllc => "latency_proxy_ms",
            SliceKind::Embb => "throughput_bytes_per_s",
            SliceKind::Mmtc => "tx_packets",
        }
    }

    /// Whether one evaluation window misses the objective. `offered` is what
    /// the slice's users tried to send over the window (bytes for embb,
    /// packets for mmtc); a slice is not blamed for demand it never had.
    pub fn violated(&self, sample: &WindowSample, offered: f64) -> bool {
        let d = &sample.delta;
        match self.kind {
            SliceKind::Urllc => sample.metric("latency_proxy_ms").unwrap_or(0.0) > self.target,
            SliceKind::Embb => {
                let want = self.target * sample.window_ms as f64 / 1000.0;
                (d.tx_bytes as f64) < want.min(offered) * 0.95
            }
            SliceKind::Mmtc => (d.tx_packets as f64) < self.target.min(offered) * 0.95,
        }
    }
}

/// Per-slice objectives plus the service priority they imply.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlicingObjectives {
    pub slices: BTreeMap<SliceId, SliceObjective>,
}

impl SlicingObjectives {
    pub fn defaults(slices: &[(SliceId, SliceKind)]) -> Self {
        Self {
            slices: slices
                .iter()
                .map(|(id, k)| (*id, SliceObjective::default_for(*k)))
                .collect(),
        }
    }

    /// Slice ids, highest priority first.
    pub fn priority(&self) -> Vec<SliceId> {
        let mut v: Vec<(f64, SliceKind, SliceId)> = self
            .slices
            .iter()
            .map(|(id, o)| (o.rank, o.kind, *id))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        v.into_iter().map(|x| x.2).collect()
    }

    /// Shortfall weight per slice: n for the top priority down to 1.
    pub fn weights(&self) -> BTreeMap<SliceId, u64> {
        let p = self.priority();
        let n = p.len() as u64;
        p.into_iter()
            .enumerate()
            .map(|(i, s)| (s, n - i as u64))
            .collect()
    }

    /// Applies a policy's statements. Returns false, leaving `self`
    /// untouched, when the policy does not fit these slices.
    pub fn apply(&mut self, p: &A1Policy) -> bool {
        let Some(slice) = p.slice() else {
            return false;
        };
        let Some(mut o) = self.slices.get(&slice).copied() else {
            return false;
        };
        for s in &p.statements {
            match s.kind {
                StatementKind::Objective => {
                    if s.name != SliceObjective::statement_name(o.kind) {
                        return false;
                    }
                    o.target = s.value;
                }
                StatementKind::Resource => o.rank = s.value,
            }
        }
        self.slices.insert(slice, o);
        true
    }

    /// Stable text form; models record the objectives they were trained for.
    pub fn fingerprint(&self) -> String {
        let mut s = String::new();
        for (id, o) in &self.slices {
            if !s.is_empty() {
                s.push(';');
            }
            write!(s, "{}:{}:{}:{}", id.0, o.kind.as_str(), o.target, o.rank).unwrap();
        }
        s
    }
}

/// Strict-priority fill: each slice in priority order gets
/// min(demand, remaining); leftover goes out in proportion to unmet demand,
/// any rounding remainder to the highest-priority unmet slice.
///
/// `demand` and the result are indexed like `order` is a permutation of.
pub fn baseline_allocation(demand: &[u32], capacity: u32, order: &[usize]) -> Vec<u32> {
    let mut grant = vec![0u32; demand.len()];
    let mut rem = capacity;
    for &i in order {
        let g = demand[i].min(rem);
        grant[i] = g;
        rem -= g;
    }
    let unmet: Vec<u64> = (0..demand.len())
        .map(|i| u64::from(demand[i] - grant[i]))
        .collect();
    let total_unmet: u64 = unmet.iter().sum();
    if rem > 0 && total_unmet > 0 {
        let pool = u64::from(rem);
        let mut given = 0u64;
        for &i in order {
            let share = (pool * unmet[i] / total_unmet).min(unmet[i]);
            grant[i] += share as u32;
            given += share;
        }
        let mut left = pool - given;
        for &i in order {
            if left == 0 {
                break;
            }
            let room = u64::from(demand[i] - grant[i]).min(left);
            grant[i] += room as u32;
            left -= room;
        }
    }
    grant
}

/// Weighted shortfall of a split against a demand vector.
pub fn shortfall_cost(demand: &[u32], split: &[u32], weights: &[u64]) -> u64 {
    demand
        .iter()
        .zip(split)
        .zip(weights)
        .map(|((d, x), w)| w * u64::from(d.saturating_sub(*x)))
        .sum()
}

/// Picks per-slice PRB quotas. With a model trained for these objectives
/// and this capacity the table is consulted; anything else falls back to
/// the baseline. Returns the grants (indexed by `slices`) and whether the
/// model produced them.
pub fn decide_allocation(
    slices: &[SliceId],
    demand: &[u32],
    capacity: u32,
    objectives: &SlicingObjectives,
    model: Option<&PolicyModel>,
) -> (Vec<u32>, bool) {
    if let Some(m) = model {
        if m.applies_to(slices, capacity, objectives) {
            if let Some(split) = m.lookup(demand) {
                return (split, true);
            }
        }
    }
    let pri = objectives.priority();
    let order: Vec<usize> = pri
        .iter()
        .filter_map(|s| slices.iter().position(|x| x == s))
        .chain((0..slices.len()).filter(|i| !pri.contains(&slices[*i])))
        .collect();
    (baseline_allocation(demand, capacity, &order), false)
}
