//! One PASS/FAIL line per acceptance criterion. Each check panics with the
//! first discrepancy; the line shows it, and the test fails if any is red.

mod common;

use common::apps::{applied, insert_run, kpm_cadence, merge_case, quota_xapp, TWO_SLICES};
use common::{gen, lifecycle, oracle, physics, policy, single_cell, Bench};
use oran_core::a1::A1Request;
use oran_core::e2ap::{decode, encode, render_debug, E2apMessage};
use oran_core::harness::{self, RunOptions, RunReport, Scenario, TransportMode, BUNDLED};
use oran_core::ids::{CellId, NodeId, UeId};
use oran_core::nonrt::{FileReady, PmCollector};
use oran_core::ric::xapp::ControlResult;
use oran_core::ric::InsertOutcome;
use oran_core::sim::SimEvent;
use oran_core::xapps::{HandoverMode, ModelError, SlicingXapp};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

const CODEC_CASES: u32 = 10_000;
const CODEC_LIMIT: Duration = Duration::from_secs(10);
const E2_LIMIT: Duration = Duration::from_secs(5);
const SLICING_LIMIT: Duration = Duration::from_secs(60);

fn runner(cases: u32) -> TestRunner {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn codec() -> String {
    runner(CODEC_CASES)
        .run(&gen::pdu(), |pdu| {
            prop_assert_eq!(decode(&encode(&pdu).unwrap()).unwrap(), pdu);
            Ok(())
        })
        .unwrap();
    let sub = render_debug(&decode(&encode(&gen::reference_subscription()).unwrap()).unwrap());
    let ind = render_debug(&decode(&encode(&gen::reference_indication()).unwrap()).unwrap());
    assert_eq!(gen::missing_lines(&sub, gen::REFERENCE_SUBSCRIPTION_LINES), Vec::<String>::new());
    assert_eq!(gen::missing_lines(&ind, gen::REFERENCE_INDICATION_LINES), Vec::<String>::new());
    format!("{CODEC_CASES} round trips, both reference PDUs render field for field")
}

fn e2_state_machines() -> String {
    let b = Bench::new(&single_cell(50, r#"{ id = 0, kind = "embb" }"#));
    let setup = b.wire.iter().find_map(|(_, p)| match &p.body {
        E2apMessage::SetupResponse { accepted_ids, .. } => Some(accepted_ids.clone()),
        _ => None,
    });
    assert_eq!(setup, Some(vec![1, 2]));
    let seen = kpm_cadence(100, 10_000);
    let sns: Vec<u32> = seen.iter().map(|s| s.1).collect();
    assert_eq!(sns, (1..=100).collect::<Vec<u32>>());
    let (acc, _) = insert_run(HandoverMode::Accept);
    assert_eq!(acc.ric.insert_outcomes()[0].1, InsertOutcome::Accepted);
    assert_eq!(acc.sim.ue(UeId(1)).unwrap().cell, CellId(2));
    let (deny, ev) = insert_run(HandoverMode::Deny);
    assert_eq!(deny.ric.insert_outcomes()[0].1, InsertOutcome::Denied);
    assert!(!ev.iter().any(|e| matches!(e, SimEvent::HandoverExecuted { .. })));
    let (quiet, ev) = insert_run(HandoverMode::Ignore);
    assert_eq!(quiet.ric.insert_outcomes()[0].1, InsertOutcome::TimedOut);
    assert!(ev.iter().any(|e| matches!(e, SimEvent::InsertTimeout { executed: true, .. })));
    "setup, 100 indications SN 1..100 in 10 s, insert accept/deny/timeout-resume".into()
}

fn merging() -> String {
    runner(16)
        .run(&(1usize..=8), |n| {
            merge_case(n);
            Ok(())
        })
        .unwrap();
    for n in 1..=8 {
        merge_case(n);
    }
    "N = 1..8: one wire subscription, N-way fan-out, one delete".into()
}

fn conflict() -> String {
    let mut b = Bench::new(&single_cell(50, TWO_SLICES));
    let out = Arc::default();
    quota_xapp(&mut b, "low", 1, 0, 10, 100, &out);
    quota_xapp(&mut b, "high", 9, 0, 30, 100, &out);
    b.run(300);
    {
        let out = out.lock().unwrap();
        let acked = |r: &ControlResult| matches!(r, ControlResult::Acknowledged(_));
        assert_eq!(out.iter().filter(|(_, r)| acked(r)).count(), 1);
        assert!(out.iter().any(|(n, r)| n == "high" && acked(r)));
        assert!(out.iter().any(|(n, r)| n == "low" && matches!(r, ControlResult::ConflictRejected { .. })));
    }
    assert_eq!(applied(&b, 0), 30);
    assert_eq!(b.ric.stats().controls_sent, 1);

    let mut b = Bench::new(&single_cell(50, TWO_SLICES));
    let out = Arc::default();
    quota_xapp(&mut b, "a", 1, 0, 10, 100, &out);
    quota_xapp(&mut b, "b", 9, 1, 30, 100, &out);
    b.run(300);
    assert_eq!(b.ric.stats().conflicts_rejected, 0);
    assert_eq!((applied(&b, 0), applied(&b, 1)), (10, 30));
    "same target: higher priority applied, other ConflictRejected; disjoint: both applied".into()
}

fn slicing() -> String {
    let g = oracle::baseline_gap();
    assert!(g.overloaded > 0);
    assert!(g.gap() <= oracle::TOLERANCE, "gap {:.4} (cost {} vs {})", g.gap(), g.got, g.best);
    let (mode, visited) = oracle::model_matches_oracle();
    assert_eq!(mode, "model");
    format!(
        "baseline {:.2}% above oracle over {} steady ticks; model = oracle on {} visited cells",
        100.0 * g.gap(),
        g.ticks,
        visited
    )
}

fn a1() -> String {
    let mut b = policy::bench();
    b.ric.handle_a1(A1Request::Create(policy::embb_floor(2.0e7)));
    b.pump();
    assert_ne!(policy::objectives(&b), policy::defaults());
    assert_eq!(policy::feedback(&mut b), vec![("embb-floor".to_owned(), true)]);
    b.run(100);
    b.ric.handle_a1(A1Request::Delete {
        policy_id: "embb-floor".into(),
    });
    b.pump();
    assert_eq!(policy::objectives(&b), policy::defaults());
    assert_eq!(policy::feedback(&mut b), vec![("embb-floor".to_owned(), false)]);

    let r = harness::run(&Scenario::resolve("a1-objectives").unwrap(), &RunOptions::default()).unwrap();
    let fb: Vec<bool> = r.a1_feedback.iter().map(|f| f.enforced).collect();
    assert_eq!(fb, vec![true, true, false]);
    "objectives change in the same tick with enforced=true; delete restores defaults, enforced=false".into()
}

fn ml_gate() -> String {
    let refused = SlicingXapp::default().with_model(lifecycle::tiny_model());
    assert!(matches!(refused, Err(ModelError::NotValidated(_))));
    let mut n = 0;
    for len in 1..=5 {
        for seq in lifecycle::sequences(len) {
            let dir = tempfile::tempdir().unwrap();
            lifecycle::check(dir.path(), &seq);
            n += 1;
        }
    }
    format!("unvalidated model refused; {n} operation sequences match the lifecycle table")
}

fn sim_physics() -> String {
    let strat = (physics::ran_config(), any::<u64>(), physics::quota_plan());
    runner(64)
        .run(&strat, |(cfg, seed, q)| physics::check_conservation(&cfg, seed, &q))
        .unwrap();
    let a3 = (200.0f64..3000.0, 0.01f64..0.4, 0.7f64..0.99, 500u64..8000, 0.0f64..6.0, 2.0f64..4.5);
    let checked = std::cell::Cell::new(0);
    runner(100)
        .run(&a3, |(gap, f0, f1, span, off, n)| {
            let (x0, x1) = (gap * f0, gap * f1);
            let t = physics::crossover_ms(gap, x0, x1, span as f64, off, n);
            if t <= 0.0 || t >= span as f64 || (t - t.round()).abs() <= 1e-6 {
                return Ok(());
            }
            prop_assert_eq!(physics::linear_run(gap, x0, x1, span, off, n), Some(t.ceil() as u64));
            checked.set(checked.get() + 1);
            Ok(())
        })
        .unwrap();
    format!("64 fuzzed RANs conserve bytes within PRB limits; {} A3 inserts on the analytic tick", checked.get())
}

fn determinism() -> String {
    let exe = std::path::PathBuf::from(env!("CARGO_BIN_EXE_oran"));
    let run = |name: &str, t: TransportMode| -> RunReport {
        let mut opts = RunOptions::default();
        opts.transport = t;
        harness::run(&Scenario::resolve(name).unwrap(), &opts).unwrap()
    };
    for (name, _) in BUNDLED {
        let a = run(name, TransportMode::Loopback);
        for b in [
            run(name, TransportMode::Loopback),
            run(name, TransportMode::TcpThread),
            run(name, TransportMode::TcpProcess(exe.clone())),
        ] {
            assert_eq!(a.state_hash, b.state_hash, "{name}");
            assert_eq!(a.files, b.files, "{name}");
        }
    }
    format!("{} scenarios: same hash and CSVs in-process, TCP thread and TCP child process", BUNDLED.len())
}

fn o1() -> String {
    let sc = Scenario::resolve("o1-faults").unwrap();
    let node = sc.sim.nodes.iter().find(|n| n.heartbeat_stop_ms.is_some()).unwrap();
    let (p, stop) = (node.heartbeat_period_ms, node.heartbeat_stop_ms.unwrap());
    let last = (stop - 1) / p * p;
    let r = harness::run(&sc, &RunOptions::default()).unwrap();
    let down: Vec<u64> = r.heartbeat.iter().filter(|e| !e.available).map(|e| e.at_ms).collect();
    assert_eq!(down, vec![last + 3 * p + 1]);

    let server: BTreeMap<(NodeId, u64), String> =
        (0..10).map(|i| ((NodeId::new("gnb-1"), i), format!("file {i}"))).collect();
    let mut pm = PmCollector::default();
    for pass in 0..3 {
        for (node, interval) in server.keys().rev() {
            let note = FileReady {
                node: node.clone(),
                interval: *interval,
            };
            assert_eq!(pm.on_file_ready(&note, &server).unwrap(), pass == 0);
        }
    }
    assert_eq!(pm.len(), server.len());
    format!("unavailable at {} = last beat {last} + 3x{p} + 1; PM replay stored once", down[0])
}

type Criterion = (u32, &'static str, fn() -> String, Option<Duration>);

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        (1, "codec", codec, Some(CODEC_LIMIT)),
        (2, "E2 state machines", e2_state_machines, Some(E2_LIMIT)),
        (3, "subscription merging", merging, None),
        (4, "conflict mitigation", conflict, None),
        (5, "slicing vs oracle", slicing, Some(SLICING_LIMIT)),
        (6, "A1 objectives", a1, None),
        (7, "ML deployment gate", ml_gate, None),
        (8, "simulator physics", sim_physics, None),
        (9, "determinism", determinism, None),
        (10, "O1 supervision", o1, None),
    ];
    let mut failed = Vec::new();
    for (n, name, check, limit) in criteria {
        let t0 = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(check));
        let took = t0.elapsed();
        let verdict = match res {
            Ok(detail) => match limit {
                Some(l) if took > l => Err(format!("{detail}, but took {took:.2?} (limit {l:?})")),
                _ => Ok(detail),
            },
            Err(e) => Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match verdict {
            Ok(d) => println!("PASS criterion {n} ({name}): {d} [{took:.2?}]"),
            Err(d) => {
                println!("FAIL criterion {n} ({name}): {d} [{took:.2?}]");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "criteria failing: {failed:?}");
}
