//! xApp SDK surface: descriptor, events delivered by the platform, and the
//! context handle through which an xApp subscribes, controls, and reads or
//! writes shared data.

use super::sdl::{Actor, SdlError};
use super::{ControlTicket, Ric, RicError, RnibEntry, SubHandle};
use crate::e2ap::{Cause, RicAction};
use crate::e2sm::{HandoverInsert, KpmIndication, RcControl, RcDomain};
use crate::ids::{Millis, NodeId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XappDescriptor {
    pub name: String,
    #[serde(default = "default_version")]
    pub version: String,
    #[serde(default)]
    pub priority: i64,
    #[serde(default)]
    pub consumed_data: Vec<String>,
    #[serde(default)]
    pub control_capabilities: Vec<RcDomain>,
    #[serde(default)]
    pub loop_period_ms: Option<u64>,
    #[serde(default)]
    pub model_path: Option<String>,
    /// Autoscaling/deployment hints and xApp-specific settings.
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

fn default_version() -> String {
    "1.0.0".into()
}

impl XappDescriptor {
    pub fn new(name: &str, priority: i64) -> Self {
        Self {
            name: name.into(),
            version: default_version(),
            priority,
            consumed_data: Vec::new(),
            control_capabilities: Vec::new(),
            loop_period_ms: None,
            model_path: None,
            params: BTreeMap::new(),
        }
    }

    /// Parses the `key = value` descriptor file format. Lists are comma
    /// separated; unknown keys land in `params`.
    pub fn parse_kv(text: &str) -> Result<Self, String> {
        let mut d = XappDescriptor::new("", 0);
        let mut named = false;
        let list = |v: &str| -> Vec<String> {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        };
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "name" => {
                    d.name = v.into();
                    named = true;
                }
                "version" => d.version = v.into(),
                "priority" => {
                    d.priority = v
                        .parse()
                        .map_err(|_| format!("line {}: bad priority `{v}`", i + 1))?
                }
                "consumed_data" => d.consumed_data = list(v),
                "control_capabilities" => {
                    d.control_capabilities = list(v)
                        .iter()
                        .map(|s| s.parse())
                        .collect::<Result<_, _>>()
                        .map_err(|e| format!("line {}: {e}", i + 1))?
                }
                "loop_period_ms" => {
                    d.loop_period_ms = Some(
                        v.parse()
                            .map_err(|_| format!("line {}: bad loop period `{v}`", i + 1))?,
                    )
                }
                "model_path" => d.model_path = Some(v.into()),
                _ => {
                    d.params.insert(k.into(), v.into());
                }
            }
        }
        if !named || d.name.is_empty() {
            return Err("descriptor lacks a name".into());
        }
        Ok(d)
    }

    pub fn can_control(&self, domain: RcDomain) -> bool {
        self.control_capabilities.contains(&domain)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControlResult {
    Acknowledged(String),
    Denied(Cause),
    Timeout,
    ConflictRejected { holder: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum XappEvent {
    NodeUp(NodeId),
    /// A report indication on one of this xApp's subscriptions. KPM payloads
    /// arrive decoded; others only as raw bytes.
    Indication {
        sub: SubHandle,
        node: NodeId,
        sequence_number: Option<u32>,
        kpm: Option<KpmIndication>,
        header: Vec<u8>,
        message: Vec<u8>,
    },
    Insert {
        sub: SubHandle,
        node: NodeId,
        insert: HandoverInsert,
        deadline: Millis,
    },
    InsertExpired {
        call_process_id: Vec<u8>,
    },
    Topic {
        topic: String,
        key: String,
        value: Option<Value>,
    },
    ControlOutcome {
        ticket: ControlTicket,
        result: ControlResult,
    },
    SubscriptionActive(SubHandle),
    SubscriptionFailed {
        sub: SubHandle,
        cause: Cause,
    },
    SubscriptionEnded {
        sub: SubHandle,
        reason: String,
    },
    /// Loop-period timer.
    Timer,
}

/// An application hosted by the near-RT RIC. Callbacks into one instance
/// are never concurrent.
pub trait XApp: Send {
    fn on_start(&mut self, _ctx: &mut XappContext<'_>) {}
    fn on_event(&mut self, ctx: &mut XappContext<'_>, event: &XappEvent);
    /// Free-form status probe.
    fn status(&self) -> Value {
        Value::Null
    }
}

/// Platform handle passed into every callback.
pub struct XappContext<'a> {
    pub(super) ric: &'a mut Ric,
    pub(super) slot: usize,
}

impl XappContext<'_> {
    pub fn now(&self) -> Millis {
        self.ric.now()
    }

    pub fn name(&self) -> &str {
        &self.ric.slots[self.slot].desc.name
    }

    pub fn descriptor(&self) -> &XappDescriptor {
        &self.ric.slots[self.slot].desc
    }

    fn actor(&self) -> Actor {
        Actor::Xapp(self.name().to_owned())
    }

    pub fn rnib(&self) -> Vec<RnibEntry> {
        self.ric.rnib().cloned().collect()
    }

    pub fn subscribe(
        &mut self,
        node: &NodeId,
        function_id: u16,
        trigger: Vec<u8>,
        actions: Vec<RicAction>,
    ) -> Result<SubHandle, RicError> {
        self.ric
            .xapp_subscribe(self.slot, node, function_id, trigger, actions)
    }

    pub fn unsubscribe(&mut self, sub: SubHandle) {
        self.ric.xapp_unsubscribe(self.slot, sub);
    }

    pub fn submit_control(
        &mut self,
        node: &NodeId,
        control: RcControl,
        in_reply_to: Option<Vec<u8>>,
    ) -> Result<ControlTicket, RicError> {
        self.ric
            .submit_control(self.slot, node, control, in_reply_to)
    }

    /// Refuses a suspended insert procedure.
    pub fn deny_insert(&mut self, call_process_id: Vec<u8>) -> Result<ControlTicket, RicError> {
        self.ric.deny_insert(self.slot, call_process_id)
    }

    pub fn sdl_get(&self, namespace: &str, key: &str) -> Result<Value, SdlError> {
        self.ric.sdl.get(namespace, key).cloned()
    }

    pub fn sdl_put(&mut self, namespace: &str, key: &str, value: Value) -> Result<(), SdlError> {
        let actor = self.actor();
        self.ric.sdl.put(&actor, namespace, key, value)
    }

    pub fn sdl_delete(&mut self, namespace: &str, key: &str) -> Result<(), SdlError> {
        let actor = self.actor();
        self.ric.sdl.delete(&actor, namespace, key)
    }

    pub fn sdl_keys(&self, namespace: &str) -> Vec<String> {
        self.ric.sdl.keys(namespace)
    }

    pub fn declare_topic(&mut self, topic: &str) {
        self.ric.declare_topic(self.slot, topic);
    }

    pub fn publish(&mut self, topic: &str, value: Value) -> Result<(), RicError> {
        self.ric.publish(Some(self.slot), topic, "latest", Some(value))
    }

    /// Last value retained on a topic.
    pub fn topic_value(&self, topic: &str) -> Option<Value> {
        self.ric
            .sdl
            .get(&format!("topic:{topic}"), "latest")
            .ok()
            .cloned()
    }

    /// Reports whether an A1 policy is being applied.
    pub fn policy_feedback(&mut self, policy_id: &str, enforced: bool) {
        self.ric.policy_feedback(self.slot, policy_id, enforced);
    }

    /// Appends text to a named data sink collected by the harness.
    pub fn sink(&mut self, name: &str, text: &str) {
        self.ric
            .sinks
            .entry(name.to_owned())
            .or_default()
            .push_str(text);
    }

    pub fn log(&mut self, msg: impl Into<String>) {
        let line = format!("{} {}: {}", self.now(), self.name(), msg.into());
        self.ric.log.push(line);
    }
}
