//! Fuzzed RAN configurations and a closed-form A3 crossover.

use oran_core::e2sm::{RcControl, SchedulerKind};
use oran_core::ids::{CellId, NodeId, SliceId, SliceKind, UeId};
use oran_core::sim::config::{CellSpec, NodeSpec, SimConfig, SliceSpec, TrafficSpec, UeSpec, Waypoint};
use oran_core::sim::{Counters, Sim, SimEvent};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use std::collections::BTreeMap;

pub const KINDS: [SliceKind; 3] = [SliceKind::Urllc, SliceKind::Embb, SliceKind::Mmtc];

pub fn traffic() -> impl Strategy<Value = TrafficSpec> {
    prop_oneof![
        Just(TrafficSpec::None),
        (1u64..5000).prop_map(|b| TrafficSpec::Constant { bytes_per_tick: b }),
        (1u64..40_000, 1u64..50).prop_map(|(b, p)| TrafficSpec::Periodic {
            burst_bytes: b,
            period_ms: p
        }),
        (0.05f64..4.0, 1u64..3000).prop_map(|(m, b)| TrafficSpec::Poisson {
            mean_packets_per_tick: m,
            packet_bytes: b
        }),
    ]
}

/// One node, up to three cells along the x axis sharing the same slice ids,
/// and UEs that wander between them.
pub fn ran_config() -> impl Strategy<Value = SimConfig> {
    (1usize..=3, 1usize..=3, 1u64..3000).prop_flat_map(|(ncells, nslices, bpp)| {
        let cells = proptest::collection::vec(
            (10u32..=60, proptest::collection::vec(0u32..=100, nslices)),
            ncells,
        );
        let ues = proptest::collection::vec(
            (
                0..ncells,
                0..nslices,
                traffic(),
                (-200.0f64..1200.0, -100.0f64..100.0),
                (-200.0f64..1200.0, -100.0f64..100.0),
                0u64..150,
            ),
            1..=8,
        );
        (cells, ues).prop_map(move |(cells, ues)| {
            let cells: Vec<CellSpec> = cells
                .into_iter()
                .enumerate()
                .map(|(i, (total, shares))| {
                    let sum: u32 = shares.iter().sum::<u32>().max(1);
                    CellSpec {
                        id: i as u32 + 1,
                        node: "gnb-1".into(),
                        global_id: None,
                        total_prb: total,
                        position: [i as f64 * 500.0, 0.0],
                        a3_offset_db: 3.0,
                        slices: shares
                            .iter()
                            .enumerate()
                            .map(|(s, &w)| SliceSpec {
                                id: s as u8,
                                kind: KINDS[s],
                                dedicated_prb: total * w / sum,
                                scheduler: [SchedulerKind::RoundRobin, SchedulerKind::HighestBufferFirst][(i + s) % 2],
                            })
                            .collect(),
                    }
                })
                .collect();
            let ues = ues
                .into_iter()
                .enumerate()
                .map(|(i, (cell, slice, traffic, a, b, from))| UeSpec {
                    id: i as u64 + 1,
                    cell: cell as u32 + 1,
                    slice: slice as u8,
                    traffic,
                    position: None,
                    path: vec![
                        Waypoint { t_ms: 0, x: a.0, y: a.1 },
                        Waypoint { t_ms: 300, x: b.0, y: b.1 },
                    ],
                    active_from_ms: from,
                    active_until_ms: None,
                })
                .collect();
            SimConfig {
                bytes_per_prb: bpp,
                nodes: vec![NodeSpec::new("gnb-1")],
                cells,
                ues,
                ..SimConfig::default()
            }
        })
    })
}

pub fn slice_counters(sim: &Sim) -> BTreeMap<(CellId, SliceId), Counters> {
    sim.cells()
        .flat_map(|c| c.slices.values().map(move |s| ((c.id, s.id), s.counters)))
        .collect()
}

/// Quota changes applied every 50 ticks: (cell, slice, PRBs).
pub type QuotaPlan = Vec<(u32, u8, u32)>;

pub fn quota_plan() -> impl Strategy<Value = QuotaPlan> {
    proptest::collection::vec((1u32..=3, 0u8..3, 0u32..=60), 6)
}

/// Runs 300 ticks checking byte conservation and PRB limits every tick.
pub fn check_conservation(cfg: &SimConfig, seed: u64, quotas: &QuotaPlan) -> Result<(), TestCaseError> {
    let mut sim = Sim::new(cfg, seed).unwrap();
    let node = NodeId::new("gnb-1");
    let bpp = cfg.bytes_per_prb;
    let mut before = slice_counters(&sim);
    for t in 1..=300u64 {
        if t % 50 == 0 {
            let (cell, slice, prb) = quotas[(t / 50) as usize - 1];
            let c = RcControl::SlicePrbQuota {
                cell_id: CellId(cell),
                slice_id: SliceId(slice),
                dedicated_prb: prb,
                min_ratio: 0.0,
                max_ratio: 1.0,
            };
            let _ = sim.apply_control(&node, &c);
        }
        let quota: BTreeMap<(CellId, SliceId), u32> = sim
            .cells()
            .flat_map(|c| c.slices.values().map(move |s| ((c.id, s.id), s.dedicated_prb)))
            .collect();
        sim.step();
        let after = slice_counters(&sim);
        let mut per_cell: BTreeMap<CellId, u64> = BTreeMap::new();
        for (key, now) in &after {
            let d = now.since(&before[key]);
            prop_assert!(d.prb_granted <= u64::from(quota[key]), "t={t} {key:?}");
            prop_assert!(d.prb_granted <= d.prb_requested);
            prop_assert!(d.tx_bytes <= d.prb_granted * bpp);
            *per_cell.entry(key.0).or_default() += d.prb_granted;
            let held = now.arrived_bytes + now.ho_in_bytes - now.tx_bytes - now.ho_out_bytes;
            prop_assert_eq!(sim.slice_buffer(key.0, key.1), held, "t={} {:?}", t, key);
        }
        for c in sim.cells() {
            prop_assert!(per_cell[&c.id] <= u64::from(c.total_prb));
            prop_assert!(c.dedicated_sum() <= c.total_prb);
        }
        for u in sim.ues() {
            prop_assert_eq!(u.counters.arrived_bytes - u.counters.tx_bytes, u.buffer_bytes);
        }
        before = after;
    }
    let arrived: u64 = sim.ues().map(|u| u.counters.arrived_bytes).sum();
    let sent: u64 = sim.ues().map(|u| u.counters.tx_bytes).sum();
    let held: u64 = sim.ues().map(|u| u.buffer_bytes).sum();
    prop_assert_eq!(arrived, sent + held);
    Ok(())
}

/// Continuous time at which a UE moving along the axis from `x0` to `x1`
/// over `span_ms` first sees the far site `offset_db` above the near one.
/// With path loss 10·n·log10(d), the condition is d_s / d_t ≥ 10^(off / 10n).
pub fn crossover_ms(site_gap: f64, x0: f64, x1: f64, span_ms: f64, offset_db: f64, n: f64) -> f64 {
    let k = 10f64.powf(offset_db / (10.0 * n));
    let x = k * site_gap / (1.0 + k);
    span_ms * (x - x0) / (x1 - x0)
}

pub fn linear_run(site_gap: f64, x0: f64, x1: f64, span_ms: u64, offset_db: f64, n: f64) -> Option<u64> {
    let cfg: SimConfig = toml::from_str(&format!(
        r#"
pathloss_exponent = {n}

[[nodes]]
id = "gnb-1"

[[cells]]
id = 1
node = "gnb-1"
total_prb = 10
position = [0.0, 0.0]
a3_offset_db = {offset_db}
slices = [{{ id = 0, kind = "embb" }}]

[[cells]]
id = 2
node = "gnb-1"
total_prb = 10
position = [{site_gap}, 0.0]
a3_offset_db = {offset_db}
slices = [{{ id = 0, kind = "embb" }}]

[[ues]]
id = 1
cell = 1
slice = 0
path = [{{ t_ms = 0, x = {x0}, y = 0.0 }}, {{ t_ms = {span_ms}, x = {x1}, y = 0.0 }}]
"#
    ))
    .unwrap();
    let mut sim = Sim::new(&cfg, 1).unwrap();
    sim.set_insert_wait(&NodeId::new("gnb-1"), Some(1_000_000));
    for _ in 0..span_ms {
        sim.step();
        for e in sim.take_events() {
            if let SimEvent::Insert { insert, .. } = e {
                assert_eq!(insert.ue_id, UeId(1));
                assert_eq!(insert.candidate_target_cell_id, CellId(2));
                return Some(sim.now());
            }
        }
    }
    None
}

