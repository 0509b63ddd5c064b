//! handover: answers A3 insert indications. Depending on its mode it
//! commands the handover, refuses it, or stays silent so the node's wait
//! timer resumes the procedure on its own.

use crate::e2ap::{ActionType, RicAction, SubsequentAction, SubsequentActionType, TimeToWait};
use crate::e2sm::{self, RcControl, RcDomain, RcEventTrigger, RcPayload};
use crate::ric::xapp::{ControlResult, XApp, XappContext, XappDescriptor, XappEvent};
use crate::sim::agent::RC_FUNCTION_ID;
use serde_json::{json, Value};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HandoverMode {
    Accept,
    Deny,
    Ignore,
    /// Accept when the target is at least this many dB stronger, else deny.
    Margin(f64),
}

impl FromStr for HandoverMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "accept" => Ok(HandoverMode::Accept),
            "deny" => Ok(HandoverMode::Deny),
            "ignore" => Ok(HandoverMode::Ignore),
            _ => s
                .strip_prefix("margin:")
                .and_then(|m| m.parse().ok())
                .map(HandoverMode::Margin)
                .ok_or_else(|| format!("unknown handover mode `{s}`")),
        }
    }
}

pub struct HandoverXapp {
    mode: HandoverMode,
    wait: TimeToWait,
    accepted: u64,
    denied: u64,
    ignored: u64,
    expired: u64,
    acked: u64,
    failed: u64,
}

impl HandoverXapp {
    pub fn new(mode: HandoverMode, wait: TimeToWait) -> Self {
        Self {
            mode,
            wait,
            accepted: 0,
            denied: 0,
            ignored: 0,
            expired: 0,
            acked: 0,
            failed: 0,
        }
    }

    pub fn descriptor(priority: i64) -> XappDescriptor {
        let mut d = XappDescriptor::new("handover", priority);
        d.control_capabilities = vec![RcDomain::ConnectedModeMobility];
        d
    }

    fn subscribe(&self, ctx: &mut XappContext<'_>, node: &crate::ids::NodeId) {
        let action = RicAction {
            action_id: 1,
            action_type: ActionType::Insert,
            definition: e2sm::encode_rc(RcPayload::ActionDefinition(RcDomain::ConnectedModeMobility))
                .expect("definition encodes"),
            subsequent: Some(SubsequentAction {
                kind: SubsequentActionType::Wait,
                time_to_wait: self.wait,
            }),
        };
        let trigger =
            e2sm::encode_rc(RcPayload::EventTrigger(RcEventTrigger::A3)).expect("trigger encodes");
        if let Err(e) = ctx.subscribe(node, RC_FUNCTION_ID, trigger, vec![action]) {
            ctx.log(format!("insert subscription {node}: {e}"));
        }
    }
}

impl XApp for HandoverXapp {
    fn on_event(&mut self, ctx: &mut XappContext<'_>, ev: &XappEvent) {
        match ev {
            XappEvent::NodeUp(node) => {
                let has_rc = ctx
                    .rnib()
                    .iter()
                    .any(|e| &e.node_id == node && e.has_function(RC_FUNCTION_ID));
                if has_rc {
                    self.subscribe(ctx, node);
                }
            }
            XappEvent::Insert { node, insert, .. } => {
                let gain = insert.target_rsrp_dbm - insert.serving_rsrp_dbm;
                let accept = match self.mode {
                    HandoverMode::Accept => Some(true),
                    HandoverMode::Deny => Some(false),
                    HandoverMode::Ignore => None,
                    HandoverMode::Margin(m) => Some(gain >= m),
                };
                let cp = insert.call_process_id.clone();
                match accept {
                    Some(true) => {
                        let gid = ctx
                            .rnib()
                            .iter()
                            .flat_map(|e| e.cells.clone())
                            .find(|c| c.cell_id == insert.candidate_target_cell_id)
                            .map(|c| c.global_id);
                        let Some(gid) = gid else {
                            ctx.log(format!("no global id for cell {}", insert.candidate_target_cell_id));
                            return;
                        };
                        let cmd = RcControl::HandoverCommand {
                            ue_id: insert.ue_id,
                            target_cell_global_id: gid,
                        };
                        match ctx.submit_control(node, cmd, Some(cp)) {
                            Ok(_) => self.accepted += 1,
                            Err(e) => ctx.log(format!("handover command: {e}")),
                        }
                    }
                    Some(false) => match ctx.deny_insert(cp) {
                        Ok(_) => self.denied += 1,
                        Err(e) => ctx.log(format!("deny: {e}")),
                    },
                    None => self.ignored += 1,
                }
            }
            XappEvent::InsertExpired { .. } => self.expired += 1,
            XappEvent::ControlOutcome { result, .. } => match result {
                ControlResult::Acknowledged(_) => self.acked += 1,
                _ => self.failed += 1,
            },
            _ => {}
        }
    }

    fn status(&self) -> Value {
        json!({
            "accepted": self.accepted,
            "denied": self.denied,
            "ignored": self.ignored,
            "expired": self.expired,
            "acked": self.acked,
            "failed": self.failed,
        })
    }
}
