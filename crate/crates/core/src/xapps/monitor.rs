//! kpm-monitor: subscribes to every DU's KPM report, keeps a rolling window
//! of records in its SDL namespace, republishes the latest per-slice values
//! on the `kpm` topic and flushes CSV rows to the `kpm-monitor.csv` sink.

use crate::e2ap::{ActionType, RicAction};
use crate::e2sm::{self, KpmActionDefinition, KpmEventTrigger, KpmPayload, KpmScope, NodeKind};
use crate::ids::{Millis, NodeId};
use crate::ric::xapp::{XApp, XappContext, XappEvent};
use crate::ric::SubHandle;
use crate::sim::agent::{CSV_HEADER, KPM_FUNCTION_ID, PM_METRICS};
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write;

pub const SINK: &str = "kpm-monitor.csv";

pub struct KpmMonitor {
    report_period_ms: u32,
    window_ms: Millis,
    series: BTreeMap<String, VecDeque<(Millis, f64)>>,
    latest: BTreeMap<String, Map<String, Value>>,
    pending_rows: String,
    header_written: bool,
    indications: u64,
    subscribed: BTreeMap<SubHandle, NodeId>,
}

impl Default for KpmMonitor {
    fn default() -> Self {
        Self::new(100, 60_000)
    }
}

impl KpmMonitor {
    pub fn new(report_period_ms: u32, window_ms: Millis) -> Self {
        Self {
            report_period_ms,
            window_ms,
            series: BTreeMap::new(),
            latest: BTreeMap::new(),
            pending_rows: String::new(),
            header_written: false,
            indications: 0,
            subscribed: BTreeMap::new(),
        }
    }

    pub fn stored_records(&self) -> usize {
        self.series.values().map(VecDeque::len).sum()
    }

    fn flush(&mut self, ctx: &mut XappContext<'_>) {
        if !self.header_written {
            ctx.sink(SINK, &format!("{CSV_HEADER}\n"));
            self.header_written = true;
        }
        let rows = std::mem::take(&mut self.pending_rows);
        ctx.sink(SINK, &rows);
    }
}

fn scope_parts(scope: &KpmScope) -> (String, String) {
    match scope {
        KpmScope::Ue(u) => (String::new(), format!("ue{u}")),
        _ => (
            scope.cell().map(|c| c.to_string()).unwrap_or_default(),
            scope.slice().map(|s| s.to_string()).unwrap_or_default(),
        ),
    }
}

impl XApp for KpmMonitor {
    fn on_start(&mut self, ctx: &mut XappContext<'_>) {
        ctx.declare_topic("kpm");
    }

    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::NodeUp(node) => {
                let is_du = ctx
                    .rnib()
                    .iter()
                    .any(|e| &e.node_id == node && e.node_kind == NodeKind::Du && e.has_function(KPM_FUNCTION_ID));
                if !is_du || self.subscribed.values().any(|n| n == node) {
                    return;
                }
                let trigger = e2sm::encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger {
                    report_period_ms: self.report_period_ms,
                }))
                .expect("trigger encodes");
                let def = e2sm::encode_kpm(KpmPayload::ActionDefinition(KpmActionDefinition {
                    node_kind: NodeKind::Du,
                    scope: KpmScope::Node,
                    metrics: PM_METRICS.iter().map(|m| m.to_string()).collect(),
                }))
                .expect("definition encodes");
                let action = RicAction {
                    action_id: 1,
                    action_type: ActionType::Report,
                    definition: def,
                    subsequent: None,
                };
                match ctx.subscribe(node, KPM_FUNCTION_ID, trigger, vec![action]) {
                    Ok(h) => {
                        self.subscribed.insert(h, node.clone());
                    }
                    Err(e) => ctx.log(format!("subscribe {node}: {e}")),
                }
            }
            XappEvent::SubscriptionEnded { sub, .. } | XappEvent::SubscriptionFailed { sub, .. } => {
                // re-subscribed on the next NodeUp
                self.subscribed.remove(sub);
            }
            XappEvent::Indication {
                node,
                kpm: Some(ind),
                ..
            } => {
                self.indications += 1;
                let now = ctx.now();
                for r in &ind.records {
                    let key = format!("{node}|{}|{}", r.scope, r.metric);
                    let q = self.series.entry(key.clone()).or_default();
                    q.push_back((r.timestamp, r.value));
                    while q
                        .front()
                        .is_some_and(|(t, _)| *t + self.window_ms <= now)
                    {
                        q.pop_front();
                    }
                    let stored: Vec<Value> = q.iter().map(|(t, v)| json!([t, v])).collect();
                    ctx.sdl_put(&format!("xapp:{}", ctx.name()), &key, Value::Array(stored))
                        .ok();
                    let (cell, slice) = scope_parts(&r.scope);
                    writeln!(
                        self.pending_rows,
                        "{},{node},{cell},{slice},{},{}",
                        r.timestamp, r.metric, r.value
                    )
                    .unwrap();
                    self.latest
                        .entry(format!("{cell}/{slice}"))
                        .or_default()
                        .insert(r.metric.clone(), json!(r.value));
                }
                let snapshot: Map<String, Value> = self
                    .latest
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::Object(v.clone())))
                    .collect();
                ctx.publish("kpm", json!({"epoch": now, "slices": snapshot}))
                    .ok();
            }
            XappEvent::Timer => self.flush(ctx),
            _ => {}
        }
    }

    fn status(&self) -> Value {
        json!({
            "indications": self.indications,
            "records": self.stored_records(),
            "nodes": self.subscribed.values().map(|n| n.as_str()).collect::<Vec<_>>(),
        })
    }
}
