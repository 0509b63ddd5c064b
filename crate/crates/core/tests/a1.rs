mod common;

use common::policy::{bench, defaults, embb_floor, feedback, objectives};
use oran_core::a1::{A1Request, PolicyScope};
use oran_core::harness::{self, RunOptions, Scenario};

#[test]
fn objective_policy_lands_within_one_loop_tick() {
    let mut b = bench();
    assert_eq!(objectives(&b), defaults());
    b.ric.handle_a1(A1Request::Create(embb_floor(2.0e7)));
    b.pump();
    assert_eq!(feedback(&mut b), vec![("embb-floor".to_owned(), true)]);
    let now = objectives(&b);
    assert_ne!(now, defaults());
    assert!(now.contains("1:embb:20000000:0"), "{now}");
    assert_eq!(b.ric.policy_enforced("embb-floor"), Some(true));
}

#[test]
fn delete_reverts_to_defaults() {
    let mut b = bench();
    b.ric.handle_a1(A1Request::Create(embb_floor(2.0e7)));
    b.run(200);
    feedback(&mut b);
    b.ric.handle_a1(A1Request::Delete {
        policy_id: "embb-floor".into(),
    });
    b.pump();
    assert_eq!(feedback(&mut b), vec![("embb-floor".to_owned(), false)]);
    assert_eq!(objectives(&b), defaults());
}

#[test]
fn policy_for_missing_slice_is_not_enforced() {
    let mut b = bench();
    let mut p = embb_floor(1.0e7);
    p.scope = PolicyScope::Slice(7);
    b.ric.handle_a1(A1Request::Create(p));
    b.pump();
    assert_eq!(feedback(&mut b), vec![("embb-floor".to_owned(), false)]);
    b.run(100);
    assert_eq!(objectives(&b), defaults());
}

#[test]
fn scenario_feedback_sequence() {
    let sc = Scenario::resolve("a1-objectives").unwrap();
    let r = harness::run(&sc, &RunOptions::default()).unwrap();
    assert_eq!(r.ric_stats.a1_errors, 0);
    let fb: Vec<(bool, u64)> = r
        .a1_feedback
        .iter()
        .filter(|f| f.policy_id == "embb-floor")
        .map(|f| (f.enforced, f.at_ms))
        .collect();
    assert_eq!(fb.len(), 3, "{fb:?}");
    assert!(fb[0].0 && fb[1].0 && !fb[2].0);
    for ((_, at), sent) in fb.iter().zip([2000, 4000, 6000]) {
        assert!((sent..=sent + 100).contains(at), "feedback at {at} for request at {sent}");
    }
    assert_eq!(r.xapps["slicing"]["policies"], serde_json::json!([]));
    assert_eq!(r.xapps["slicing"]["cells"]["1"]["objectives"], serde_json::json!(defaults()));
}

