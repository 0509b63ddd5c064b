mod common;

use common::apps::{insert_run, kpm_cadence};
use common::{single_cell, Bench};
use oran_core::e2ap::E2apMessage;
use oran_core::ids::{CellId, NodeId, UeId};
use oran_core::ric::InsertOutcome;
use oran_core::sim::SimEvent;
use oran_core::xapps::HandoverMode;

#[test]
fn setup_exchanges_function_lists() {
    let b = Bench::new(&single_cell(50, r#"{ id = 0, kind = "embb" }"#));
    assert_eq!(b.sent_to_ric(|p| matches!(p.body, E2apMessage::SetupRequest { .. })), 1);
    let accepted = b.wire.iter().find_map(|(_, p)| match &p.body {
        E2apMessage::SetupResponse { accepted_ids, rejected_ids } => Some((accepted_ids.clone(), rejected_ids.clone())),
        _ => None,
    });
    assert_eq!(accepted, Some((vec![1, 2], vec![])));
    let entry = b.ric.rnib_entry(&NodeId::new("gnb-1")).unwrap();
    assert_eq!(entry.cells.len(), 1);
    assert_eq!(entry.cells[0].total_prb, 50);
}

#[test]
fn kpm_cadence_100ms_over_10s() {
    let seen = kpm_cadence(100, 10_000);
    assert_eq!(seen.len(), 100);
    let sns: Vec<u32> = seen.iter().map(|s| s.1).collect();
    assert_eq!(sns, (1..=100).collect::<Vec<u32>>());
    let times: Vec<u64> = seen.iter().map(|s| s.0).collect();
    assert_eq!(times, (1..=100).map(|k| k * 100).collect::<Vec<u64>>());
}

fn first_insert(events: &[SimEvent]) -> bool {
    events.iter().any(|e| matches!(e, SimEvent::Insert { .. }))
}

#[test]
fn insert_accept_hands_over() {
    let (b, ev) = insert_run(HandoverMode::Accept);
    assert!(first_insert(&ev));
    assert_eq!(b.ric.insert_outcomes()[0].1, InsertOutcome::Accepted);
    assert!(ev.iter().any(|e| matches!(e, SimEvent::HandoverExecuted { ue: UeId(1), to: CellId(2), .. })));
    assert_eq!(b.sim.ue(UeId(1)).unwrap().cell, CellId(2));
}

#[test]
fn insert_deny_keeps_serving_cell() {
    let (b, ev) = insert_run(HandoverMode::Deny);
    assert!(first_insert(&ev));
    assert_eq!(b.ric.insert_outcomes()[0].1, InsertOutcome::Denied);
    assert!(!ev.iter().any(|e| matches!(e, SimEvent::HandoverExecuted { .. })));
    assert_eq!(b.sim.ue(UeId(1)).unwrap().cell, CellId(1));
    assert!(b.sim.ue(UeId(1)).unwrap().frozen.is_none());
}

#[test]
fn insert_timeout_resumes_procedure() {
    let (b, ev) = insert_run(HandoverMode::Ignore);
    let emitted = ev
        .iter()
        .position(|e| matches!(e, SimEvent::Insert { .. }))
        .expect("insert emitted");
    assert_eq!(b.ric.insert_outcomes()[0].1, InsertOutcome::TimedOut);
    let resumed = ev[emitted..]
        .iter()
        .any(|e| matches!(e, SimEvent::InsertTimeout { executed: true, .. }));
    assert!(resumed, "{ev:?}");
    assert_eq!(b.sim.ue(UeId(1)).unwrap().cell, CellId(2));
}
