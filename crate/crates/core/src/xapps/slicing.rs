//! slicing: every loop period, splits each cell's PRBs among its slices from
//! observed demand (blended with the forecast topic), publishes the result
//! on `slicing-profile` and pushes changed quotas to the DU.

use super::{decide_allocation, ModelError, PolicyModel, SlicingObjectives};
use crate::a1::A1Policy;
use crate::e2ap::{ActionType, RicAction};
use crate::e2sm::{self, KpmActionDefinition, KpmEventTrigger, KpmPayload, KpmScope, NodeKind, RcControl};
use crate::ids::{CellId, Millis, NodeId, SliceId};
use crate::ric::xapp::{ControlResult, XApp, XappContext, XappDescriptor, XappEvent};
use crate::ric::{ControlTicket, RnibEntry};
use crate::sim::agent::KPM_FUNCTION_ID;
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, BTreeSet};

type Target = (NodeId, CellId, SliceId);

pub struct SlicingXapp {
    report_period_ms: u32,
    model: Option<PolicyModel>,
    policies: BTreeMap<String, A1Policy>,
    subscribed: BTreeSet<NodeId>,
    applied: BTreeMap<Target, u32>,
    inflight: BTreeMap<ControlTicket, (Target, u32)>,
    last: BTreeMap<CellId, Vec<u32>>,
    stable_since: BTreeMap<CellId, Millis>,
    visited: BTreeSet<Vec<u32>>,
    decisions: u64,
    model_decisions: u64,
    rejections: u64,
    last_by_model: bool,
    objectives: BTreeMap<CellId, SlicingObjectives>,
}

impl Default for SlicingXapp {
    fn default() -> Self {
        Self::new(100)
    }
}

/// PRBs needed to cover a fractional demand.
pub fn ceil_prb(v: f64) -> u32 {
    if v.is_finite() && v > 0.0 {
        (v - 1e-9).ceil().max(0.0) as u32
    } else {
        0
    }
}

impl SlicingXapp {
    pub fn new(report_period_ms: u32) -> Self {
        Self {
            report_period_ms,
            model: None,
            policies: BTreeMap::new(),
            subscribed: BTreeSet::new(),
            applied: BTreeMap::new(),
            inflight: BTreeMap::new(),
            last: BTreeMap::new(),
            stable_since: BTreeMap::new(),
            visited: BTreeSet::new(),
            decisions: 0,
            model_decisions: 0,
            rejections: 0,
            last_by_model: false,
            objectives: BTreeMap::new(),
        }
    }

    /// Installs a model; refused unless it passed validation.
    pub fn with_model(mut self, model: PolicyModel) -> Result<Self, ModelError> {
        model.check_deployable()?;
        self.model = Some(model);
        Ok(self)
    }

    /// Installs a model that is still under validation. Only the validation
    /// stage of the model pipeline may do this.
    pub(crate) fn with_candidate(mut self, model: PolicyModel) -> Self {
        self.model = Some(model);
        self
    }

    /// Builds the xApp from its descriptor, loading `model_path` if set
    /// (file-based deployment).
    pub fn from_descriptor(desc: &XappDescriptor) -> Result<Self, ModelError> {
        let period = desc.loop_period_ms.unwrap_or(100).clamp(10, 1000) as u32;
        let x = Self::new(period);
        match &desc.model_path {
            Some(p) => x.with_model(PolicyModel::load(std::path::Path::new(p))?),
            None => Ok(x),
        }
    }

    pub fn descriptor(priority: i64) -> XappDescriptor {
        let mut d = XappDescriptor::new("slicing", priority);
        d.consumed_data = vec!["forecast".into(), "policies".into()];
        d.control_capabilities = vec![crate::e2sm::RcDomain::RadioResourceAllocation];
        d.loop_period_ms = Some(100);
        d
    }

    fn objectives_for(&self, slices: &[(SliceId, crate::ids::SliceKind)]) -> SlicingObjectives {
        let mut o = SlicingObjectives::defaults(slices);
        for p in self.policies.values() {
            o.apply(p);
        }
        o
    }

    fn policy_fits(&self, p: &A1Policy, rnib: &[RnibEntry]) -> bool {
        rnib.iter().flat_map(|e| &e.cells).any(|c| {
            let mut o = SlicingObjectives::defaults(&c.slices);
            o.apply(p)
        })
    }

    fn subscribe(&mut self, ctx: &mut XappContext<'_>, node: &NodeId) {
        let trigger = e2sm::encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger {
            report_period_ms: self.report_period_ms,
        }))
        .expect("trigger encodes");
        let def = e2sm::encode_kpm(KpmPayload::ActionDefinition(KpmActionDefinition {
            node_kind: NodeKind::Du,
            scope: KpmScope::Node,
            metrics: vec!["prb_requested".into()],
        }))
        .expect("definition encodes");
        let action = RicAction {
            action_id: 1,
            action_type: ActionType::Report,
            definition: def,
            subsequent: None,
        };
        match ctx.subscribe(node, KPM_FUNCTION_ID, trigger, vec![action]) {
            Ok(_) => {
                self.subscribed.insert(node.clone());
            }
            Err(e) => ctx.log(format!("subscribe {node}: {e}")),
        }
    }

    fn loop_tick(&mut self, ctx: &mut XappContext<'_>) {
        let now = ctx.now();
        let ns = format!("xapp:{}", ctx.name());
        let forecast = ctx.topic_value("forecast");
        let fc = |s: SliceId| -> Option<f64> {
            forecast
                .as_ref()?
                .get("demand_prb")?
                .get(s.0.to_string())?
                .as_f64()
        };
        let mut profile = Map::new();
        let rnib = ctx.rnib();
        for e in rnib.iter().filter(|e| e.connected) {
            for cell in &e.cells {
                let ids: Vec<SliceId> = cell.slices.iter().map(|(s, _)| *s).collect();
                let mut seen = false;
                let demand: Vec<u32> = ids
                    .iter()
                    .map(|s| {
                        let key = format!("{}|{}|{}", e.node_id, cell.cell_id, s);
                        let obs = ctx.sdl_get(&ns, &key).ok().and_then(|v| v.as_f64());
                        let f = fc(*s);
                        seen |= obs.is_some() || f.is_some();
                        ceil_prb(obs.unwrap_or(0.0)).max(ceil_prb(f.unwrap_or(0.0)))
                    })
                    .collect();
                if !seen {
                    continue;
                }
                let obj = self.objectives_for(&cell.slices);
                let (split, by_model) =
                    decide_allocation(&ids, &demand, cell.total_prb, &obj, self.model.as_ref());
                self.decisions += 1;
                self.last_by_model = by_model;
                if by_model {
                    self.model_decisions += 1;
                    let m = self.model.as_ref().expect("model used");
                    self.visited.insert(m.quantize(&demand));
                }
                if self.last.get(&cell.cell_id) != Some(&split) {
                    self.stable_since.insert(cell.cell_id, now);
                    self.last.insert(cell.cell_id, split.clone());
                }
                self.objectives.insert(cell.cell_id, obj);
                let quota: Map<String, Value> = ids
                    .iter()
                    .zip(&split)
                    .map(|(s, q)| (s.to_string(), json!(q)))
                    .collect();
                profile.insert(
                    cell.cell_id.to_string(),
                    json!({"node": e.node_id.as_str(), "capacity": cell.total_prb,
                           "demand": demand, "quota": quota}),
                );
                self.push_quotas(ctx, &e.node_id, cell.cell_id, cell.total_prb, &ids, &split);
            }
        }
        if !profile.is_empty() {
            ctx.publish("slicing-profile", json!({"epoch": now, "cells": profile}))
                .ok();
        }
    }

    fn push_quotas(
        &mut self,
        ctx: &mut XappContext<'_>,
        node: &NodeId,
        cell: CellId,
        capacity: u32,
        ids: &[SliceId],
        split: &[u32],
    ) {
        let busy: BTreeSet<&Target> = self.inflight.values().map(|(t, _)| t).collect();
        let mut changes: Vec<(bool, u32, SliceId)> = ids
            .iter()
            .zip(split)
            .filter_map(|(s, q)| {
                let t = (node.clone(), cell, *s);
                if busy.contains(&t) {
                    return None;
                }
                match self.applied.get(&t) {
                    Some(a) if a == q => None,
                    Some(a) => Some((q > a, *q, *s)),
                    None => Some((true, *q, *s)),
                }
            })
            .collect();
        // decreases first so the cell never goes over capacity
        changes.sort();
        for (_, q, s) in changes {
            let control = RcControl::SlicePrbQuota {
                cell_id: cell,
                slice_id: s,
                dedicated_prb: q,
                min_ratio: f64::from(q) / f64::from(capacity.max(1)),
                max_ratio: 1.0,
            };
            match ctx.submit_control(node, control, None) {
                Ok(t) => {
                    self.inflight.insert(t, ((node.clone(), cell, s), q));
                }
                Err(e) => ctx.log(format!("quota {cell}/{s}: {e}")),
            }
        }
    }

    fn on_policy(&mut self, ctx: &mut XappContext<'_>, id: &str, value: Option<&Value>) {
        match value.and_then(|v| serde_json::from_value::<A1Policy>(v.clone()).ok()) {
            Some(p) => {
                let fits = self.policy_fits(&p, &ctx.rnib());
                if fits {
                    self.policies.insert(id.to_owned(), p);
                } else {
                    self.policies.remove(id);
                }
                ctx.policy_feedback(id, fits);
            }
            None => {
                self.policies.remove(id);
                ctx.policy_feedback(id, false);
            }
        }
        // objectives take effect now, not at the next timer
        let cells: Vec<_> = ctx.rnib().into_iter().flat_map(|e| e.cells).collect();
        for c in cells {
            let o = self.objectives_for(&c.slices);
            self.objectives.insert(c.cell_id, o);
        }
    }

    pub fn objectives(&self, cell: CellId) -> Option<&SlicingObjectives> {
        self.objectives.get(&cell)
    }
}

impl XApp for SlicingXapp {
    fn on_start(&mut self, ctx: &mut XappContext<'_>) {
        ctx.declare_topic("slicing-profile");
    }

    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::NodeUp(node) => {
                let has_kpm = ctx
                    .rnib()
                    .iter()
                    .any(|e| &e.node_id == node && e.has_function(KPM_FUNCTION_ID) && !e.cells.is_empty());
                if has_kpm {
                    self.subscribed.remove(node);
                    self.applied.retain(|(n, _, _), _| n != node);
                    self.subscribe(ctx, node);
                }
            }
            XappEvent::Indication {
                node,
                kpm: Some(ind),
                ..
            } => {
                let ns = format!("xapp:{}", ctx.name());
                for r in &ind.records {
                    if let (Some(c), Some(s), "prb_requested") =
                        (r.scope.cell(), r.scope.slice(), r.metric.as_str())
                    {
                        ctx.sdl_put(&ns, &format!("{node}|{c}|{s}"), json!(r.value))
                            .ok();
                    }
                }
            }
            XappEvent::Topic { topic, key, value } if topic == "policies" => {
                self.on_policy(ctx, key, value.as_ref())
            }
            XappEvent::ControlOutcome { ticket, result } => {
                let Some((t, q)) = self.inflight.remove(ticket) else {
                    return;
                };
                match result {
                    ControlResult::Acknowledged(_) => {
                        self.applied.insert(t, q);
                    }
                    other => {
                        self.rejections += 1;
                        ctx.log(format!("quota {}/{} -> {q} not applied: {other:?}", t.1, t.2));
                    }
                }
            }
            XappEvent::SubscriptionEnded { .. } => self.subscribed.clear(),
            XappEvent::Timer => self.loop_tick(ctx),
            _ => {}
        }
    }

    fn status(&self) -> Value {
        let cells: Map<String, Value> = self
            .last
            .iter()
            .map(|(c, split)| {
                (
                    c.to_string(),
                    json!({
                        "split": split,
                        "stable_since": self.stable_since.get(c),
                        "objectives": self.objectives.get(c).map(|o| o.fingerprint()),
                    }),
                )
            })
            .collect();
        json!({
            "mode": if self.last_by_model { "model" } else { "baseline" },
            "model_id": self.model.as_ref().map(|m| m.model_id.clone()),
            "decisions": self.decisions,
            "model_decisions": self.model_decisions,
            "rejections": self.rejections,
            "policies": self.policies.keys().collect::<Vec<_>>(),
            "visited": self.visited.iter().collect::<Vec<_>>(),
            "cells": cells,
        })
    }
}
