//! Exhaustive-partition oracle for three-slice PRB splits, computed from a
//! scenario's own traffic description.

use oran_core::harness::{self, RunOptions, Scenario, ScenarioRole, BUNDLED};
use oran_core::mlops::{self, Catalog};
use serde_json::Value;
use oran_core::sim::config::TrafficSpec;
use std::collections::BTreeSet;

/// Slices in priority order urllc, embb, mmtc carry weights 3, 2, 1.
pub const WEIGHTS: [u64; 3] = [3, 2, 1];
pub const SETTLE_MS: u64 = 500;
pub const TOLERANCE: f64 = 0.05;

pub fn cost(demand: &[u32], split: &[u32]) -> u64 {
    demand
        .iter()
        .zip(split)
        .zip(WEIGHTS)
        .map(|((&d, &x), w)| w * u64::from(d.saturating_sub(x)))
        .sum()
}

/// Every split of `cap` PRBs into three non-negative parts; the cheapest,
/// earliest in lexicographic order on ties.
pub fn oracle(demand: &[u32], cap: u32) -> (u64, Vec<u32>) {
    let mut best = (u64::MAX, vec![]);
    for a in 0..=cap {
        for b in 0..=cap - a {
            let x = [a, b, cap - a - b];
            let c = cost(demand, &x);
            if c < best.0 {
                best = (c, x.to_vec());
            }
        }
    }
    best
}

/// Demand in PRBs per slice at tick `t`, straight from the UE list.
pub fn demand_at(sc: &Scenario, t: u64) -> Vec<u32> {
    let bpp = sc.sim.bytes_per_prb;
    let mut d = [0u64; 3];
    for u in &sc.sim.ues {
        let active = t >= u.active_from_ms && u.active_until_ms.is_none_or(|e| t < e);
        if let (true, TrafficSpec::Constant { bytes_per_tick }) = (active, &u.traffic) {
            d[u.slice as usize] += bytes_per_tick;
        }
    }
    d.iter().map(|b| b.div_ceil(bpp) as u32).collect()
}

pub fn phase_changes(sc: &Scenario) -> BTreeSet<u64> {
    let mut s = BTreeSet::from([0]);
    for u in &sc.sim.ues {
        s.insert(u.active_from_ms);
        s.extend(u.active_until_ms);
    }
    s
}

pub fn steady(sc: &Scenario, t: u64) -> bool {
    let last = phase_changes(sc).range(..=t).next_back().copied().unwrap_or(0);
    t >= sc.warmup_ms && t >= last + SETTLE_MS
}

/// Weighted shortfall of the closed-loop splits against the oracle's, summed
/// over steady-state ticks of `slicing-overload`.
pub struct BaselineGap {
    pub got: u64,
    pub best: u64,
    pub ticks: usize,
    pub overloaded: usize,
}

pub fn baseline_gap() -> BaselineGap {
    let sc = Scenario::resolve("slicing-overload").unwrap();
    assert!(sc.sim.ues.iter().all(|u| matches!(u.traffic, TrafficSpec::Constant { .. })));
    let cap = sc.sim.cells[0].total_prb;
    let mut opts = RunOptions::default();
    opts.trace = true;
    let r = harness::run(&sc, &opts).unwrap();
    let (mut got, mut best, mut ticks, mut overloaded) = (0u64, 0u64, 0, 0);
    for q in &r.quota_trace {
        if !steady(&sc, q.t) {
            continue;
        }
        let demand = demand_at(&sc, q.t + 1);
        let split: Vec<u32> = q.quota.iter().map(|&(_, p)| p).collect();
        assert!(split.iter().sum::<u32>() <= cap);
        got += cost(&demand, &split);
        best += oracle(&demand, cap).0;
        ticks += 1;
        overloaded += usize::from(demand.iter().sum::<u32>() > cap);
    }
    BaselineGap {
        got,
        best,
        ticks,
        overloaded,
    }
}

impl BaselineGap {
    pub fn gap(&self) -> f64 {
        (self.got as f64 - self.best as f64) / self.best as f64
    }
}

/// Trains on the bundled family, runs `slicing-overload` with the published
/// model and checks every visited grid cell against the oracle. Returns the
/// slicing xApp's final mode and the number of cells visited.
pub fn model_matches_oracle() -> (String, usize) {
    let dir = tempfile::tempdir().unwrap();
    let family: Vec<Scenario> = BUNDLED
        .iter()
        .map(|(n, _)| Scenario::resolve(n).unwrap())
        .filter(|s| s.role.is_some())
        .collect();
    assert!(family.iter().any(|s| s.role == Some(ScenarioRole::Validate)));
    let mut catalog = Catalog::new(dir.path());
    let out = mlops::train_pipeline(&family, &mut catalog).unwrap();
    let model = out.model;

    let mut sc = Scenario::resolve("slicing-overload").unwrap();
    sc.model_id = Some(model.model_id.clone());
    let mut opts = RunOptions::default();
    opts.catalog = Some(dir.path().to_path_buf());
    let r = harness::run(&sc, &opts).unwrap();
    let status = &r.xapps["slicing"];
    assert_eq!(status["model_id"], Value::String(model.model_id.clone()));
    let visited: Vec<Vec<u32>> = serde_json::from_value(status["visited"].clone()).unwrap();
    for cell in &visited {
        let (_, want) = oracle(cell, model.capacity);
        let fits = cell.iter().sum::<u32>() <= model.capacity;
        let expect = if fits { cell.clone() } else { want };
        assert_eq!(model.table.get(cell), Some(&expect), "cell {cell:?}");
        assert_eq!(cost(cell, &expect), oracle(cell, model.capacity).0);
    }
    (status["mode"].as_str().unwrap_or_default().to_owned(), visited.len())
}
