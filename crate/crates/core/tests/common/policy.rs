//! A1 policy fixtures on a one-cell, three-slice bench running the slicing xApp.

use super::{single_cell, Bench};
use oran_core::a1::{A1Policy, A1Reply, Comparator, PolicyScope, Statement, StatementKind, SLICING_POLICY_TYPE};
use oran_core::ids::{SliceId, SliceKind};
use oran_core::xapps::{SlicingObjectives, SlicingXapp};

pub const SLICES: &str = r#"{ id = 0, kind = "urllc" }, { id = 1, kind = "embb" }, { id = 2, kind = "mmtc" }"#;

pub fn defaults() -> String {
    SlicingObjectives::defaults(&[
        (SliceId(0), SliceKind::Urllc),
        (SliceId(1), SliceKind::Embb),
        (SliceId(2), SliceKind::Mmtc),
    ])
    .fingerprint()
}

pub fn embb_floor(target: f64) -> A1Policy {
    A1Policy {
        policy_id: "embb-floor".into(),
        policy_type_id: SLICING_POLICY_TYPE,
        scope: PolicyScope::Slice(1),
        statements: vec![
            Statement {
                kind: StatementKind::Objective,
                name: "throughput_bytes_per_s".into(),
                comparator: Comparator::Ge,
                value: target,
            },
            Statement {
                kind: StatementKind::Resource,
                name: "priority".into(),
                comparator: Comparator::Eq,
                value: 0.0,
            },
        ],
    }
}

pub fn objectives(b: &Bench) -> String {
    let s = b.ric.xapp_status("slicing").unwrap();
    s["cells"]["1"]["objectives"].as_str().unwrap_or_default().to_owned()
}

pub fn feedback(b: &mut Bench) -> Vec<(String, bool)> {
    b.ric
        .take_a1_replies()
        .into_iter()
        .filter_map(|r| match r {
            A1Reply::Feedback { policy_id, enforced, .. } => Some((policy_id, enforced)),
            A1Reply::Error { .. } => None,
        })
        .collect()
}

pub fn bench() -> Bench {
    let mut b = Bench::new(&single_cell(50, SLICES));
    b.deploy(SlicingXapp::descriptor(10), Box::new(SlicingXapp::default()));
    b.run(500);
    b
}

