use oran_core::harness::{self, RunOptions, Scenario};
use oran_core::ids::NodeId;
use oran_core::nonrt::{Availability, FileReady, HeartbeatMonitor, O1Error, PmCollector};
use proptest::prelude::*;
use std::collections::{BTreeMap, BTreeSet};

/// Last beat a node sends before it falls silent at `stop`, beating on
/// multiples of `period`.
fn last_beat(period: u64, stop: u64) -> u64 {
    (stop - 1) / period * period
}

#[test]
fn silent_node_goes_unavailable_on_time() {
    let sc = Scenario::resolve("o1-faults").unwrap();
    let node = sc.sim.nodes.iter().find(|n| n.heartbeat_stop_ms.is_some()).unwrap();
    let (p, stop) = (node.heartbeat_period_ms, node.heartbeat_stop_ms.unwrap());
    let r = harness::run(&sc, &RunOptions::default()).unwrap();
    let events: Vec<_> = r.heartbeat.iter().map(|e| (e.node.as_str(), e.available, e.at_ms)).collect();
    assert_eq!(events, vec![(node.id.as_str(), false, last_beat(p, stop) + 3 * p + 1)]);
}

#[test]
fn pm_files_arrive_once_per_interval() {
    let sc = Scenario::resolve("o1-faults").unwrap();
    let r = harness::run(&sc, &RunOptions::default()).unwrap();
    let want: u64 = sc.sim.nodes.iter().map(|n| sc.duration_ms / n.pm_interval_ms).sum();
    assert_eq!(r.pm_files, want);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn heartbeat_matches_reference(
        period in 1u64..200,
        beats in proptest::collection::btree_set(1u64..3000, 0..40),
    ) {
        let node = NodeId::new("n");
        let mut hb = HeartbeatMonitor::default();
        hb.register(&node, period, 0);
        let mut last = 0;
        let mut down = false;
        for t in 1..=3500u64 {
            if beats.contains(&t) {
                hb.beat(&node, t);
                last = t;
                down = false;
            }
            let fired = hb.poll(t);
            let due = !down && t == last + 3 * period + 1;
            prop_assert_eq!(fired.len(), usize::from(due), "t={}", t);
            if due {
                down = true;
            }
            let want = if down { Availability::Unavailable } else { Availability::Available };
            prop_assert_eq!(hb.state(&node), Some(want));
        }
    }

    #[test]
    fn pm_collection_is_idempotent_under_replay(
        files in proptest::collection::btree_set((0u8..3, 0u64..20), 1..30),
        replay in proptest::collection::vec(any::<prop::sample::Index>(), 0..60),
    ) {
        let server: BTreeMap<(NodeId, u64), String> = files
            .iter()
            .map(|&(n, i)| ((NodeId::new(format!("gnb-{n}")), i), format!("blob {n} {i}")))
            .collect();
        let keys: Vec<_> = server.keys().cloned().collect();
        let mut order: Vec<_> = keys.clone();
        order.extend(replay.iter().map(|ix| keys[ix.index(keys.len())].clone()));
        let mut pm = PmCollector::default();
        let mut fresh = BTreeSet::new();
        for (node, interval) in order {
            let new = pm.on_file_ready(&FileReady { node: node.clone(), interval }, &server).unwrap();
            prop_assert_eq!(new, fresh.insert((node, interval)));
        }
        prop_assert_eq!(pm.len(), server.len());
        for (k, v) in pm.files() {
            prop_assert_eq!(&server[k], v);
        }
    }
}

#[test]
fn announced_file_missing_is_an_error() {
    let mut pm = PmCollector::default();
    let note = FileReady {
        node: NodeId::new("gnb-1"),
        interval: 4,
    };
    assert!(matches!(pm.on_file_ready(&note, &BTreeMap::new()), Err(O1Error::MissingFile { interval: 4, .. })));
    assert!(pm.is_empty());
}
