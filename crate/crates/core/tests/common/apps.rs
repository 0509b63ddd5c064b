//! Small xApps and fixtures driven through the bench.

use super::{single_cell, Bench};
use oran_core::e2ap::{ActionType, E2apMessage, E2apPdu, RicAction, TimeToWait};
use oran_core::e2sm::{
    self, KpmActionDefinition, KpmEventTrigger, KpmPayload, KpmScope, NodeKind, RcControl, RcDomain,
};
use oran_core::ids::{CellId, NodeId, SliceId};
use oran_core::ric::xapp::{ControlResult, XApp, XappContext, XappDescriptor, XappEvent};
use oran_core::sim::agent::KPM_FUNCTION_ID;
use oran_core::sim::config::SimConfig;
use oran_core::sim::SimEvent;
use oran_core::xapps::{HandoverMode, HandoverXapp};
use std::sync::{Arc, Mutex};

/// Subscribes to node-level KPM on every node that comes up and records
/// the sequence number of each report.
pub struct Recorder {
    pub period: u32,
    pub seen: Arc<Mutex<Vec<(u64, u32)>>>,
}

impl XApp for Recorder {
    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::NodeUp(node) => {
                let trigger = e2sm::encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger {
                    report_period_ms: self.period,
                }))
                .unwrap();
                let def = e2sm::encode_kpm(KpmPayload::ActionDefinition(KpmActionDefinition {
                    node_kind: NodeKind::Du,
                    scope: KpmScope::Node,
                    metrics: vec!["tx_bytes".into()],
                }))
                .unwrap();
                let action = RicAction {
                    action_id: 1,
                    action_type: ActionType::Report,
                    definition: def,
                    subsequent: None,
                };
                ctx.subscribe(node, KPM_FUNCTION_ID, trigger, vec![action]).unwrap();
            }
            XappEvent::Indication { sequence_number, kpm, .. } => {
                assert!(kpm.is_some());
                self.seen.lock().unwrap().push((ctx.now(), sequence_number.unwrap()));
            }
            _ => {}
        }
    }
}

/// (time, sequence number) of every KPM report over `ms` at `period`.
pub fn kpm_cadence(period: u32, ms: u64) -> Vec<(u64, u32)> {
    let mut b = Bench::new(&single_cell(50, r#"{ id = 0, kind = "embb" }"#));
    let seen = Arc::new(Mutex::new(Vec::new()));
    b.deploy(
        XappDescriptor::new("rec", 1),
        Box::new(Recorder {
            period,
            seen: seen.clone(),
        }),
    );
    b.run(ms);
    let v = seen.lock().unwrap().clone();
    v
}

/// Two cells 1 km apart; UE 1 walks from the first site to the second.
pub fn corridor() -> SimConfig {
    toml::from_str(
        r#"
[[nodes]]
id = "gnb-1"

[[cells]]
id = 1
node = "gnb-1"
total_prb = 50
position = [0.0, 0.0]
slices = [{ id = 1, kind = "embb", dedicated_prb = 50 }]

[[cells]]
id = 2
node = "gnb-1"
total_prb = 50
position = [1000.0, 0.0]
slices = [{ id = 1, kind = "embb", dedicated_prb = 50 }]

[[ues]]
id = 1
cell = 1
slice = 1
traffic = { kind = "constant", bytes_per_tick = 1000 }
path = [{ t_ms = 0, x = 100.0, y = 0.0 }, { t_ms = 4000, x = 900.0, y = 0.0 }]
"#,
    )
    .unwrap()
}

pub fn insert_run(mode: HandoverMode) -> (Bench, Vec<SimEvent>) {
    let mut b = Bench::new(&corridor());
    b.deploy(
        HandoverXapp::descriptor(5),
        Box::new(HandoverXapp::new(mode, TimeToWait::W100ms)),
    );
    b.run(4000);
    let events = b.events.clone();
    (b, events)
}

pub type Log = Arc<Mutex<Vec<String>>>;

pub struct Subscriber {
    name: String,
    log: Log,
}

impl XApp for Subscriber {
    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::NodeUp(node) => {
                let trigger = e2sm::encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger { report_period_ms: 100 }))
                    .unwrap();
                let def = e2sm::encode_kpm(KpmPayload::ActionDefinition(KpmActionDefinition {
                    node_kind: NodeKind::Du,
                    scope: KpmScope::Cell(CellId(1)),
                    metrics: vec!["tx_bytes".into(), "prb_granted".into()],
                }))
                .unwrap();
                let action = RicAction {
                    action_id: 1,
                    action_type: ActionType::Report,
                    definition: def,
                    subsequent: None,
                };
                ctx.subscribe(node, KPM_FUNCTION_ID, trigger, vec![action]).unwrap();
            }
            XappEvent::Indication { sequence_number, .. } => {
                self.log.lock().unwrap().push(format!("{} {}", self.name, sequence_number.unwrap()));
            }
            _ => {}
        }
    }
}

pub fn is_sub_request(p: &E2apPdu) -> bool {
    matches!(p.body, E2apMessage::SubscriptionRequest { .. })
}

pub fn is_sub_delete(p: &E2apPdu) -> bool {
    matches!(p.body, E2apMessage::SubscriptionDeleteRequest { .. })
}

pub fn merge_case(n: usize) {
    let mut b = Bench::new(&single_cell(50, r#"{ id = 0, kind = "embb" }"#));
    let log: Log = Arc::default();
    for i in 0..n {
        let name = format!("sub-{i}");
        b.deploy(
            XappDescriptor::new(&name, 1),
            Box::new(Subscriber {
                name: name.clone(),
                log: log.clone(),
            }),
        );
    }
    b.run(500);
    assert_eq!(b.sent_from_ric(is_sub_request), 1, "n={n}");
    assert_eq!(b.ric.stats().wire_subscriptions, 1);
    let indications = b.sent_to_ric(|p| matches!(p.body, E2apMessage::Indication { .. }));
    assert_eq!(indications, 5);
    assert_eq!(log.lock().unwrap().len(), 5 * n, "every indication reaches every subscriber");
    for i in 0..n {
        assert_eq!(b.sent_from_ric(is_sub_delete), 0);
        b.ric.terminate(&format!("sub-{i}")).unwrap();
        b.pump();
    }
    assert_eq!(b.sent_from_ric(is_sub_delete), 1);
    assert_eq!(b.agents[0].active_subscriptions(), 0);
}

/// Sets a PRB quota on (gnb-1, cell 1, `slice`) at `at_ms`.
pub struct Quota {
    slice: u8,
    prb: u32,
    at_ms: u64,
    outcomes: Arc<Mutex<Vec<(String, ControlResult)>>>,
}

impl XApp for Quota {
    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::Timer if ctx.now() == self.at_ms => {
                let c = RcControl::SlicePrbQuota {
                    cell_id: CellId(1),
                    slice_id: SliceId(self.slice),
                    dedicated_prb: self.prb,
                    min_ratio: 0.0,
                    max_ratio: 1.0,
                };
                ctx.submit_control(&NodeId::new("gnb-1"), c, None).unwrap();
            }
            XappEvent::ControlOutcome { result, .. } => {
                let name = ctx.name().to_owned();
                self.outcomes.lock().unwrap().push((name, result.clone()));
            }
            _ => {}
        }
    }
}

pub fn quota_xapp(
    b: &mut Bench,
    name: &str,
    priority: i64,
    slice: u8,
    prb: u32,
    at_ms: u64,
    outcomes: &Arc<Mutex<Vec<(String, ControlResult)>>>,
) {
    let mut d = XappDescriptor::new(name, priority);
    d.control_capabilities = vec![RcDomain::RadioResourceAllocation];
    d.loop_period_ms = Some(10);
    b.deploy(
        d,
        Box::new(Quota {
            slice,
            prb,
            at_ms,
            outcomes: outcomes.clone(),
        }),
    );
}

pub const TWO_SLICES: &str = r#"{ id = 0, kind = "urllc" }, { id = 1, kind = "embb" }"#;

pub fn applied(b: &Bench, slice: u8) -> u32 {
    b.sim.cell(CellId(1)).unwrap().slices[&SliceId(slice)].dedicated_prb
}

