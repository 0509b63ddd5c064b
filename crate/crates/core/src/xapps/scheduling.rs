//! scheduling: consumes the forecast (A), KPM (B) and slicing profile (C)
//! topics and derives a per-slice intra-slice scheduler choice, published as
//! `scheduling-profile` (D) and installed on the DU as a pair of control
//! policies around the load threshold.

use crate::e2sm::{Comparator, RcControl, RcDomain, SchedulerKind, TriggerCondition};
use crate::ids::{CellId, Millis, NodeId, SliceId};
use crate::ric::xapp::{XApp, XappContext, XappDescriptor, XappEvent};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;

/// Load above this fraction of the slice quota switches to highest-buffer-first.
pub const HBF_LOAD_FRACTION: f64 = 0.8;

pub fn choose_scheduler(load_prb: f64, quota_prb: f64) -> SchedulerKind {
    if load_prb > HBF_LOAD_FRACTION * quota_prb {
        SchedulerKind::HighestBufferFirst
    } else {
        SchedulerKind::RoundRobin
    }
}

#[derive(Default)]
pub struct SchedulingXapp {
    installed: BTreeMap<(NodeId, CellId, SliceId), f64>,
    published: u64,
    deferred: u64,
    /// (epoch of D, epoch of the C it was computed from)
    epochs: Vec<(Millis, Millis)>,
    last_profile: Value,
}

impl SchedulingXapp {
    pub fn descriptor(priority: i64) -> XappDescriptor {
        let mut d = XappDescriptor::new("scheduling", priority);
        d.consumed_data = vec!["forecast".into(), "kpm".into(), "slicing-profile".into()];
        d.control_capabilities = vec![RcDomain::RadioResourceAllocation];
        d
    }

    fn load(forecast: &Option<Value>, kpm: &Option<Value>, cell: &str, slice: &str) -> f64 {
        let from_a = forecast
            .as_ref()
            .and_then(|f| f.get("demand_prb")?.get(slice)?.as_f64());
        let from_b = || {
            kpm.as_ref().and_then(|k| {
                k.get("slices")?
                    .get(format!("{cell}/{slice}"))?
                    .get("prb_requested")?
                    .as_f64()
            })
        };
        from_a.or_else(from_b).unwrap_or(0.0)
    }

    fn recompute(&mut self, ctx: &mut XappContext<'_>, c: &Value) {
        let now = ctx.now();
        let forecast = ctx.topic_value("forecast");
        let kpm = ctx.topic_value("kpm");
        let c_epoch = c.get("epoch").and_then(Value::as_u64).unwrap_or(0);
        let Some(cells) = c.get("cells").and_then(Value::as_object) else {
            return;
        };
        let mut profile = Map::new();
        for (cell_key, entry) in cells {
            let (Ok(cell), Some(node), Some(quota)) = (
                cell_key.parse::<u32>(),
                entry.get("node").and_then(Value::as_str),
                entry.get("quota").and_then(Value::as_object),
            ) else {
                continue;
            };
            let node = NodeId::new(node);
            let mut choice = Map::new();
            for (slice_key, q) in quota {
                let (Ok(slice), Some(q)) = (slice_key.parse::<u8>(), q.as_f64()) else {
                    continue;
                };
                let load = Self::load(&forecast, &kpm, cell_key, slice_key);
                choice.insert(slice_key.clone(), json!(choose_scheduler(load, q).as_str()));
                let threshold = HBF_LOAD_FRACTION * q;
                let target = (node.clone(), CellId(cell), SliceId(slice));
                if self.installed.get(&target) == Some(&threshold) {
                    continue;
                }
                let rule = |cmp, sched| RcControl::ControlPolicy {
                    condition: TriggerCondition {
                        metric: "prb_requested".into(),
                        comparator: cmp,
                        threshold,
                    },
                    action: Box::new(RcControl::SliceScheduler {
                        cell_id: CellId(cell),
                        slice_id: SliceId(slice),
                        scheduler: sched,
                    }),
                };
                let ok = [
                    rule(Comparator::Gt, SchedulerKind::HighestBufferFirst),
                    rule(Comparator::Le, SchedulerKind::RoundRobin),
                ]
                .into_iter()
                .all(|r| match ctx.submit_control(&node, r, None) {
                    Ok(_) => true,
                    Err(e) => {
                        ctx.log(format!("scheduler policy {cell}/{slice}: {e}"));
                        false
                    }
                });
                if ok {
                    self.installed.insert(target, threshold);
                }
            }
            profile.insert(cell_key.clone(), Value::Object(choice));
        }
        let d = json!({"epoch": now, "c_epoch": c_epoch, "cells": profile});
        self.last_profile = d.clone();
        self.published += 1;
        self.epochs.push((now, c_epoch));
        ctx.publish("scheduling-profile", d).ok();
    }
}

impl XApp for SchedulingXapp {
    fn on_start(&mut self, ctx: &mut XappContext<'_>) {
        ctx.declare_topic("scheduling-profile");
    }

    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::Topic {
                topic,
                value: Some(c),
                ..
            } if topic == "slicing-profile" => self.recompute(ctx, c),
            XappEvent::Topic { .. } if ctx.topic_value("slicing-profile").is_none() => {
                self.deferred += 1
            }
            XappEvent::NodeUp(node) => self.installed.retain(|(n, _, _), _| n != node),
            _ => {}
        }
    }

    fn status(&self) -> Value {
        json!({
            "published": self.published,
            "deferred": self.deferred,
            "causal": self.epochs.iter().all(|(d, c)| c <= d),
            "epochs": self.epochs,
            "profile": self.last_profile,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_rule() {
        assert_eq!(choose_scheduler(9.0, 10.0), SchedulerKind::HighestBufferFirst);
        assert_eq!(choose_scheduler(1.0, 10.0), SchedulerKind::RoundRobin);
        assert_eq!(choose_scheduler(8.0, 10.0), SchedulerKind::RoundRobin);
    }
}
