//! Near-RT RIC platform. A deterministic state machine driven by the caller:
//! feed it inbound E2 and A1 messages, call [`Ric::tick`] once per simulated
//! millisecond, then drain the outbound queues.
//!
//! Within a tick the order is fixed: inbound E2 (connection order, FIFO),
//! A1, insert expiry, control timeouts, xApp timers, then the event queue is
//! drained and same-instant controls are arbitrated until nothing is left,
//! and finally due post-action verifications run.

pub mod conflict;
pub mod sdl;
pub mod xapp;

use crate::a1::{validate_policy, A1Policy, A1Reply, A1Request};
use crate::e2ap::{
    ActionType, Cause, CauseKind, E2apMessage, E2apPdu, IndicationType, RanFunction, RicAction,
    RicRequestId, TimeToWait,
};
use crate::e2sm::{
    self, CellConfig, ControlVerdict, HandoverInsert, KpmIndication, KpmPayload, KpmScope,
    NodeKind, RcControl, RcControlHeader, RcDomain, RcPayload, ServiceModelId, SmPayload,
};
use crate::ids::{CellId, Millis, NodeId, SliceId, SliceKind, UeId};
use conflict::{objective_metric, verify, ConflictKey, InsufficientData, LockDecision, LockTable, Verdict};
use sdl::{Actor, Sdl, WatchId};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;
use xapp::{ControlResult, XApp, XappContext, XappDescriptor, XappEvent};

/// Identifies one E2 connection as seen by the RIC.
pub type ConnId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct RicConfig {
    pub requestor_id: u32,
    pub guard_window_ms: Millis,
    pub verify_window_ms: Millis,
    pub verify_threshold: f64,
    pub control_timeout_ms: Millis,
}

impl Default for RicConfig {
    fn default() -> Self {
        Self {
            requestor_id: 123,
            guard_window_ms: 1000,
            verify_window_ms: 2000,
            verify_threshold: 0.05,
            control_timeout_ms: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RicError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node has no RAN function {0}")]
    UnknownFunction(u16),
    #[error("xApp lacks the {} control capability", .0.as_str())]
    UnsupportedDomain(RcDomain),
    #[error("xApp `{0}` already onboarded with that version")]
    DuplicateName(String),
    #[error("xApp `{0}` not onboarded")]
    NotOnboarded(String),
    #[error("xApp `{0}` not deployed")]
    NotDeployed(String),
    #[error("topic `{0}` not declared by this producer")]
    UndeclaredTopic(String),
    #[error("no pending insert with that call process id")]
    UnknownInsert,
    #[error("invalid control: {0}")]
    InvalidControl(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SubHandle(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ControlTicket(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct RnibEntry {
    pub node_id: NodeId,
    pub node_kind: NodeKind,
    pub functions: Vec<RanFunction>,
    pub connected: bool,
    pub last_seen: Millis,
    pub conn: ConnId,
    /// Cells and slices advertised by the node's KPM function.
    pub cells: Vec<CellConfig>,
}

impl RnibEntry {
    pub fn has_function(&self, id: u16) -> bool {
        self.functions.iter().any(|f| f.function_id == id)
    }

    pub fn slice_kind(&self, cell: CellId, slice: SliceId) -> Option<SliceKind> {
        self.cells
            .iter()
            .find(|c| c.cell_id == cell)?
            .slices
            .iter()
            .find(|(s, _)| *s == slice)
            .map(|(_, k)| *k)
    }

    fn to_json(&self) -> Value {
        json!({
            "node_kind": self.node_kind.as_str(),
            "functions": self.functions.iter().map(|f| json!({
                "function_id": f.function_id, "name": f.name, "revision": f.revision,
            })).collect::<Vec<_>>(),
            "connected": self.connected,
            "last_seen": self.last_seen,
            "cells": self.cells.iter().map(|c| json!({
                "cell_id": c.cell_id.0, "global_id": c.global_id, "total_prb": c.total_prb,
                "slices": c.slices.iter().map(|(s, k)| json!([s.0, k.as_str()])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeNibEntry {
    pub ue_id: UeId,
    pub contexts: Vec<(NodeId, CellId, Option<SliceId>)>,
}

/// (action id, type, definition, subsequent).
pub type ActionKey = (u8, u8, Vec<u8>, Option<(u8, u8)>);

/// Canonical identity of a wire subscription.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SubKey {
    pub node: NodeId,
    pub function_id: u16,
    pub trigger: Vec<u8>,
    /// Sorted by action id.
    pub actions: Vec<ActionKey>,
}

impl SubKey {
    fn new(node: &NodeId, function_id: u16, trigger: &[u8], actions: &[RicAction]) -> Self {
        let mut acts: Vec<_> = actions
            .iter()
            .map(|a| {
                (
                    a.action_id,
                    a.action_type.code(),
                    a.definition.clone(),
                    a.subsequent
                        .map(|s| (s.kind as u8, s.time_to_wait.code())),
                )
            })
            .collect();
        acts.sort();
        SubKey {
            node: node.clone(),
            function_id,
            trigger: trigger.to_vec(),
            actions: acts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubState {
    Pending,
    Active,
}

#[derive(Debug, Clone)]
pub struct SubscriptionRecord {
    pub key: SubKey,
    pub request_id: RicRequestId,
    pub state: SubState,
    /// (xApp slot, handle) in registration order.
    pub subscribers: Vec<(usize, SubHandle)>,
    actions: Vec<RicAction>,
}

impl SubscriptionRecord {
    fn time_to_wait(&self) -> Millis {
        self.actions
            .iter()
            .find(|a| a.action_type == ActionType::Insert)
            .and_then(|a| a.subsequent)
            .map(|s| s.time_to_wait)
            .unwrap_or(TimeToWait::W10ms)
            .millis()
    }

    fn kpm_definition(&self, action_id: u8) -> Option<e2sm::KpmActionDefinition> {
        let a = self.actions.iter().find(|a| a.action_id == action_id)?;
        match e2sm::decode_kpm(&a.definition) {
            Ok(KpmPayload::ActionDefinition(d)) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InsertPending {
    pub node: NodeId,
    pub insert: HandoverInsert,
    pub deadline: Millis,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InsertOutcome {
    Accepted,
    Denied,
    TimedOut,
}

#[derive(Debug, Clone)]
struct QueuedControl {
    ticket: ControlTicket,
    slot: usize,
    node: NodeId,
    control: RcControl,
    in_reply_to: Option<Vec<u8>>,
    order: u64,
}

#[derive(Debug, Clone)]
struct InflightControl {
    ticket: ControlTicket,
    slot: usize,
    node: NodeId,
    control: Option<RcControl>,
    sent_at: Millis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRecord {
    pub ticket: ControlTicket,
    pub xapp: String,
    pub target: ConflictKey,
    pub metric: String,
    pub applied_at: Millis,
    pub outcome: Result<Verdict, InsufficientData>,
}

#[derive(Debug, Clone)]
struct DueVerification {
    ticket: ControlTicket,
    xapp: String,
    target: ConflictKey,
    scope: KpmScope,
    metric: String,
    higher_is_better: bool,
    applied_at: Millis,
    due: Millis,
}

/// Counters exposed in the metrics snapshot.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RicStats {
    pub setups: u64,
    pub wire_subscriptions: u64,
    pub wire_deletes: u64,
    pub subscription_failures: u64,
    pub indications: u64,
    pub deliveries: u64,
    pub orphan_indications: u64,
    pub malformed_indications: u64,
    pub inserts_received: u64,
    pub inserts_unrouted: u64,
    pub inserts_accepted: u64,
    pub inserts_denied: u64,
    pub inserts_timed_out: u64,
    pub controls_sent: u64,
    pub controls_acked: u64,
    pub controls_failed: u64,
    pub controls_timed_out: u64,
    pub conflicts_rejected: u64,
    pub a1_policies: u64,
    pub a1_errors: u64,
    pub ei_messages: u64,
    pub error_indications: u64,
}

pub(crate) struct Slot {
    pub(crate) desc: XappDescriptor,
    app: Option<Box<dyn XApp>>,
    alive: bool,
    watches: Vec<(String, WatchId)>,
    handles: BTreeSet<SubHandle>,
}

const PLATFORM_TOPICS: &[&str] = &["policies", "forecast"];

pub struct Ric {
    cfg: RicConfig,
    now: Millis,
    pub(crate) sdl: Sdl,
    rnib: BTreeMap<NodeId, RnibEntry>,
    uenib: BTreeMap<UeId, UeNibEntry>,
    conns: BTreeMap<ConnId, Option<NodeId>>,
    catalog: Vec<XappDescriptor>,
    pub(crate) slots: Vec<Slot>,
    subs: BTreeMap<SubKey, SubscriptionRecord>,
    keys_seen: BTreeSet<SubKey>,
    routes: BTreeMap<RicRequestId, SubKey>,
    handles: BTreeMap<SubHandle, (usize, SubKey)>,
    next_instance: u32,
    next_handle: u64,
    next_ticket: u64,
    next_order: u64,
    inserts: BTreeMap<Vec<u8>, InsertPending>,
    insert_log: Vec<(Vec<u8>, InsertOutcome)>,
    locks: LockTable,
    queued: Vec<QueuedControl>,
    inflight: BTreeMap<RicRequestId, InflightControl>,
    verifications_due: Vec<DueVerification>,
    verifications: Vec<VerificationRecord>,
    kpm_store: BTreeMap<(NodeId, KpmScope, String), VecDeque<(Millis, f64)>>,
    topics: BTreeMap<String, BTreeSet<Option<usize>>>,
    policies: BTreeMap<String, A1Policy>,
    policy_status: BTreeMap<String, bool>,
    events: VecDeque<(usize, XappEvent)>,
    outbox: Vec<(ConnId, E2apPdu)>,
    a1_out: Vec<A1Reply>,
    pub(crate) sinks: BTreeMap<String, String>,
    pub(crate) log: Vec<String>,
    stats: RicStats,
}

impl Default for Ric {
    fn default() -> Self {
        Ric::new(RicConfig::default())
    }
}

impl Ric {
    pub fn new(cfg: RicConfig) -> Self {
        let mut r = Ric {
            locks: LockTable::new(cfg.guard_window_ms),
            cfg,
            now: 0,
            sdl: Sdl::new(),
            rnib: BTreeMap::new(),
            uenib: BTreeMap::new(),
            conns: BTreeMap::new(),
            catalog: Vec::new(),
            slots: Vec::new(),
            subs: BTreeMap::new(),
            keys_seen: BTreeSet::new(),
            routes: BTreeMap::new(),
            handles: BTreeMap::new(),
            next_instance: 1,
            next_handle: 1,
            next_ticket: 1,
            next_order: 0,
            inserts: BTreeMap::new(),
            insert_log: Vec::new(),
            queued: Vec::new(),
            inflight: BTreeMap::new(),
            verifications_due: Vec::new(),
            verifications: Vec::new(),
            kpm_store: BTreeMap::new(),
            topics: BTreeMap::new(),
            policies: BTreeMap::new(),
            policy_status: BTreeMap::new(),
            events: VecDeque::new(),
            outbox: Vec::new(),
            a1_out: Vec::new(),
            sinks: BTreeMap::new(),
            log: Vec::new(),
            stats: RicStats::default(),
        };
        for t in PLATFORM_TOPICS {
            r.topics.entry((*t).into()).or_default().insert(None);
            r.sdl.create_namespace(&format!("topic:{t}"));
        }
        r
    }

    pub fn config(&self) -> &RicConfig {
        &self.cfg
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn set_now(&mut self, now: Millis) {
        self.now = now;
    }

    pub fn stats(&self) -> &RicStats {
        &self.stats
    }

    pub fn rnib(&self) -> impl Iterator<Item = &RnibEntry> {
        self.rnib.values()
    }

    pub fn rnib_entry(&self, node: &NodeId) -> Option<&RnibEntry> {
        self.rnib.get(node)
    }

    pub fn uenib(&self, ue: UeId) -> Option<&UeNibEntry> {
        self.uenib.get(&ue)
    }

    pub fn sdl(&self) -> &Sdl {
        &self.sdl
    }

    pub fn sdl_mut(&mut self) -> &mut Sdl {
        &mut self.sdl
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = &SubscriptionRecord> {
        self.subs.values()
    }

    /// Distinct subscription keys ever sent on the wire.
    pub fn distinct_subscription_keys(&self) -> usize {
        self.keys_seen.len()
    }

    /// Controls sent and not yet answered.
    pub fn inflight_controls(&self) -> usize {
        self.inflight.len()
    }

    pub fn pending_inserts(&self) -> impl Iterator<Item = (&Vec<u8>, &InsertPending)> {
        self.inserts.iter()
    }

    /// Terminal state of every insert received, in resolution order.
    pub fn insert_outcomes(&self) -> &[(Vec<u8>, InsertOutcome)] {
        &self.insert_log
    }

    pub fn verifications(&self) -> &[VerificationRecord] {
        &self.verifications
    }

    pub fn lock_holder(&self, key: &ConflictKey) -> Option<&str> {
        self.locks.holder(key, self.now)
    }

    pub fn sinks(&self) -> &BTreeMap<String, String> {
        &self.sinks
    }

    pub fn take_sinks(&mut self) -> BTreeMap<String, String> {
        std::mem::take(&mut self.sinks)
    }

    pub fn log_lines(&self) -> &[String] {
        &self.log
    }

    pub fn policy(&self, id: &str) -> Option<&A1Policy> {
        self.policies.get(id)
    }

    pub fn policy_enforced(&self, id: &str) -> Option<bool> {
        self.policy_status.get(id).copied()
    }

    pub fn kpm_series(&self, node: &NodeId, scope: KpmScope, metric: &str) -> Vec<(Millis, f64)> {
        self.kpm_store
            .get(&(node.clone(), scope, metric.to_owned()))
            .map(|q| q.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Adds one KPM sample to the store used by post-action verification.
    pub fn record_kpm(&mut self, node: &NodeId, scope: KpmScope, metric: &str, t: Millis, v: f64) {
        let horizon = self.cfg.verify_window_ms * 3;
        let q = self
            .kpm_store
            .entry((node.clone(), scope, metric.to_owned()))
            .or_default();
        q.push_back((t, v));
        while q.front().is_some_and(|(ts, _)| ts + horizon < t) {
            q.pop_front();
        }
    }

    pub fn take_outbox(&mut self) -> Vec<(ConnId, E2apPdu)> {
        std::mem::take(&mut self.outbox)
    }

    pub fn take_a1_replies(&mut self) -> Vec<A1Reply> {
        std::mem::take(&mut self.a1_out)
    }

    /// Metrics snapshot as `metric,value` CSV.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        if let Value::Object(m) = serde_json::to_value(&self.stats).expect("stats serialize") {
            for (k, v) in m {
                out.push_str(&format!("{k},{v}\n"));
            }
        }
        out
    }

    pub fn xapp_statuses(&self) -> BTreeMap<String, Value> {
        self.slots
            .iter()
            .filter(|s| s.alive)
            .filter_map(|s| Some((s.desc.name.clone(), s.app.as_ref()?.status())))
            .collect()
    }

    fn send(&mut self, node: &NodeId, msg: E2apMessage) {
        if let Some(e) = self.rnib.get(node) {
            self.outbox.push((e.conn, E2apPdu::new(msg)));
        }
    }

    fn next_request_id(&mut self) -> RicRequestId {
        let id = RicRequestId::new(self.cfg.requestor_id, self.next_instance);
        self.next_instance += 1;
        id
    }

    // ---- lifecycle ----

    pub fn onboard(&mut self, desc: XappDescriptor) -> Result<(), RicError> {
        if self
            .catalog
            .iter()
            .any(|d| d.name == desc.name && d.version == desc.version)
        {
            return Err(RicError::DuplicateName(desc.name));
        }
        self.catalog.push(desc);
        Ok(())
    }

    fn slot_of(&self, name: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.alive && s.desc.name == name)
    }

    pub fn is_deployed(&self, name: &str) -> bool {
        self.slot_of(name).is_some()
    }

    /// Starts an onboarded xApp (latest onboarded version) with the given
    /// implementation.
    pub fn deploy(&mut self, name: &str, app: Box<dyn XApp>) -> Result<(), RicError> {
        let desc = self
            .catalog
            .iter()
            .rev()
            .find(|d| d.name == name)
            .cloned()
            .ok_or_else(|| RicError::NotOnboarded(name.into()))?;
        if self.slot_of(name).is_some() {
            return Err(RicError::DuplicateName(name.into()));
        }
        self.sdl.create_namespace(&format!("xapp:{name}"));
        let mut watches = Vec::new();
        for t in &desc.consumed_data {
            let ns = format!("topic:{t}");
            self.sdl.create_namespace(&ns);
            let w = self.sdl.watch(&ns).expect("namespace just created");
            watches.push((t.clone(), w));
        }
        let slot = self.slots.len();
        self.slots.push(Slot {
            desc,
            app: Some(app),
            alive: true,
            watches,
            handles: BTreeSet::new(),
        });
        self.with_app(slot, |app, ctx| app.on_start(ctx));
        let nodes: Vec<NodeId> = self
            .rnib
            .values()
            .filter(|e| e.connected)
            .map(|e| e.node_id.clone())
            .collect();
        for n in nodes {
            self.events.push_back((slot, XappEvent::NodeUp(n)));
        }
        Ok(())
    }

    pub fn terminate(&mut self, name: &str) -> Result<(), RicError> {
        let slot = self
            .slot_of(name)
            .ok_or_else(|| RicError::NotDeployed(name.into()))?;
        let handles: Vec<SubHandle> = self.slots[slot].handles.iter().copied().collect();
        for h in handles {
            self.xapp_unsubscribe(slot, h);
        }
        self.locks.release_all(name);
        let watches = std::mem::take(&mut self.slots[slot].watches);
        for (_, w) in watches {
            self.sdl.unwatch(w);
        }
        self.sdl.drop_namespace(&format!("xapp:{name}"));
        for producers in self.topics.values_mut() {
            producers.remove(&Some(slot));
        }
        self.queued.retain(|q| q.slot != slot);
        self.events.retain(|(s, _)| *s != slot);
        let s = &mut self.slots[slot];
        s.alive = false;
        s.app = None;
        Ok(())
    }

    fn with_app(&mut self, slot: usize, f: impl FnOnce(&mut Box<dyn XApp>, &mut XappContext<'_>)) {
        let Some(mut app) = self.slots[slot].app.take() else {
            return;
        };
        {
            let mut ctx = XappContext { ric: self, slot };
            f(&mut app, &mut ctx);
        }
        if self.slots[slot].alive {
            self.slots[slot].app = Some(app);
        }
        self.pump_watches();
    }

    /// Status probe of a deployed xApp.
    pub fn xapp_status(&self, name: &str) -> Option<Value> {
        let slot = self.slot_of(name)?;
        self.slots[slot].app.as_ref().map(|a| a.status())
    }

    // ---- data topics ----

    pub(crate) fn declare_topic(&mut self, slot: usize, topic: &str) {
        self.topics
            .entry(topic.to_owned())
            .or_default()
            .insert(Some(slot));
        self.sdl.create_namespace(&format!("topic:{topic}"));
    }

    /// Platform-side topic declaration (used for rApp-fed EI topics).
    pub fn declare_platform_topic(&mut self, topic: &str) {
        self.topics.entry(topic.to_owned()).or_default().insert(None);
        self.sdl.create_namespace(&format!("topic:{topic}"));
    }

    /// Writes a topic value; `producer` None is the platform.
    pub fn publish(
        &mut self,
        producer: Option<usize>,
        topic: &str,
        key: &str,
        value: Option<Value>,
    ) -> Result<(), RicError> {
        if !self
            .topics
            .get(topic)
            .is_some_and(|p| p.contains(&producer))
        {
            return Err(RicError::UndeclaredTopic(topic.into()));
        }
        let ns = format!("topic:{topic}");
        match value {
            Some(v) => self.sdl.put(&Actor::Platform, &ns, key, v),
            None => self.sdl.delete(&Actor::Platform, &ns, key),
        }
        .ok();
        self.pump_watches();
        Ok(())
    }

    fn pump_watches(&mut self) {
        for slot in 0..self.slots.len() {
            if !self.slots[slot].alive {
                continue;
            }
            let watches = self.slots[slot].watches.clone();
            for (topic, w) in watches {
                for c in self.sdl.poll(w) {
                    self.events.push_back((
                        slot,
                        XappEvent::Topic {
                            topic: topic.clone(),
                            key: c.key,
                            value: c.value,
                        },
                    ));
                }
            }
        }
    }

    // ---- A1 ----

    pub fn handle_a1(&mut self, req: A1Request) {
        match req {
            A1Request::Create(p) | A1Request::Update(p) => {
                if let Err(e) = validate_policy(&p) {
                    self.stats.a1_errors += 1;
                    self.a1_out.push(A1Reply::Error {
                        policy_id: p.policy_id,
                        error: e.to_string(),
                    });
                    return;
                }
                self.stats.a1_policies += 1;
                let id = p.policy_id.clone();
                let value = serde_json::to_value(&p).expect("policy serializes");
                self.policies.insert(id.clone(), p);
                self.policy_status.insert(id.clone(), false);
                self.publish(None, "policies", &id, Some(value))
                    .expect("platform topic");
                if !self.has_consumer("policies") {
                    self.push_feedback(&id, false);
                }
            }
            A1Request::Delete { policy_id } => {
                if self.policies.remove(&policy_id).is_none() {
                    self.stats.a1_errors += 1;
                    self.a1_out.push(A1Reply::Error {
                        policy_id,
                        error: "unknown policy id".into(),
                    });
                    return;
                }
                self.publish(None, "policies", &policy_id, None)
                    .expect("platform topic");
                if !self.has_consumer("policies") {
                    self.push_feedback(&policy_id, false);
                }
            }
            A1Request::Query { policy_id } => {
                let ids: Vec<String> = match policy_id {
                    Some(id) => vec![id],
                    None => self.policies.keys().cloned().collect(),
                };
                for id in ids {
                    match self.policy_status.get(&id) {
                        Some(&enforced) if self.policies.contains_key(&id) => {
                            self.a1_out.push(A1Reply::Feedback {
                                policy_id: id,
                                enforced,
                                at_ms: self.now,
                            })
                        }
                        _ => self.a1_out.push(A1Reply::Error {
                            policy_id: id,
                            error: "unknown policy id".into(),
                        }),
                    }
                }
            }
            A1Request::Ei(m) => {
                self.stats.ei_messages += 1;
                self.declare_platform_topic(&m.topic);
                self.publish(None, &m.topic, "latest", Some(m.payload))
                    .expect("declared above");
            }
        }
    }

    fn has_consumer(&self, topic: &str) -> bool {
        self.slots
            .iter()
            .any(|s| s.alive && s.desc.consumed_data.iter().any(|t| t == topic))
    }

    fn push_feedback(&mut self, policy_id: &str, enforced: bool) {
        self.a1_out.push(A1Reply::Feedback {
            policy_id: policy_id.to_owned(),
            enforced,
            at_ms: self.now,
        });
    }

    pub(crate) fn policy_feedback(&mut self, _slot: usize, policy_id: &str, enforced: bool) {
        let known = self.policies.contains_key(policy_id);
        let prev = self.policy_status.get(policy_id).copied();
        if known {
            self.policy_status.insert(policy_id.to_owned(), enforced);
        } else {
            self.policy_status.remove(policy_id);
        }
        // deletions always report; otherwise only on transitions or first report
        if !known || prev != Some(enforced) || !enforced {
            self.push_feedback(policy_id, enforced);
        }
    }

    // ---- E2 ----

    pub fn connection_opened(&mut self, conn: ConnId) {
        self.conns.insert(conn, None);
    }

    pub fn connection_closed(&mut self, conn: ConnId) {
        if let Some(Some(node)) = self.conns.remove(&conn) {
            if let Some(e) = self.rnib.get_mut(&node) {
                if e.conn == conn {
                    e.connected = false;
                    self.end_node_subscriptions(&node, None, "connection closed");
                    self.mirror_rnib(&node);
                }
            }
        }
    }

    pub fn handle_e2(&mut self, conn: ConnId, pdu: E2apPdu) {
        let node = self.conns.get(&conn).cloned().flatten();
        if let Some(n) = &node {
            if let Some(e) = self.rnib.get_mut(n) {
                e.last_seen = self.now;
            }
        }
        match pdu.body {
            E2apMessage::SetupRequest { node_id, functions } => {
                self.handle_setup(conn, NodeId::new(node_id), functions)
            }
            _ if node.is_none() => self.reply_error(
                conn,
                CauseKind::Rejected,
                format!("{} before E2 setup", pdu.body.name()),
            ),
            E2apMessage::ServiceUpdate {
                added,
                modified,
                deleted,
            } => self.handle_service_update(conn, &node.unwrap(), added, modified, deleted),
            E2apMessage::SubscriptionResponse { request_id, .. } => {
                self.on_subscription_response(request_id)
            }
            E2apMessage::SubscriptionFailure { request_id, cause } => {
                self.on_subscription_failure(request_id, cause)
            }
            E2apMessage::SubscriptionDeleteResponse { .. } => {}
            E2apMessage::Indication {
                request_id,
                action_id,
                sequence_number,
                indication_type,
                header,
                message,
                call_process_id,
                ..
            } => self.route_indication(
                &node.unwrap(),
                request_id,
                action_id,
                sequence_number,
                indication_type,
                header,
                message,
                call_process_id,
            ),
            E2apMessage::ControlAcknowledge {
                request_id,
                outcome,
            } => {
                let summary = match e2sm::decode_rc(&outcome) {
                    Ok(RcPayload::Outcome(o)) => o.summary,
                    _ => String::new(),
                };
                self.on_control_result(request_id, ControlResult::Acknowledged(summary))
            }
            E2apMessage::ControlFailure { request_id, cause } => {
                self.on_control_result(request_id, ControlResult::Denied(cause))
            }
            E2apMessage::ErrorIndication { .. } => self.stats.error_indications += 1,
            other => self.reply_error(
                conn,
                CauseKind::Unsupported,
                format!("unexpected {} at RIC", other.name()),
            ),
        }
    }

    fn reply_error(&mut self, conn: ConnId, kind: CauseKind, detail: String) {
        self.outbox.push((
            conn,
            E2apPdu::new(E2apMessage::ErrorIndication {
                cause: Cause::new(kind, detail),
            }),
        ));
    }

    /// Returns the KPM cells advertised by a function definition, or None
    /// when the definition does not decode for its service model.
    fn function_acceptable(f: &RanFunction) -> Option<(Option<NodeKind>, Vec<CellConfig>)> {
        match e2sm::sm_decode(&f.definition).ok()? {
            SmPayload::Kpm(KpmPayload::FunctionDefinition(d)) => {
                Some((d.node_kinds.first().copied(), d.cells))
            }
            SmPayload::Rc(RcPayload::FunctionDefinition(_)) => Some((None, Vec::new())),
            SmPayload::Ni(_) if f.name == ServiceModelId::Ni.function_name() => {
                Some((None, Vec::new()))
            }
            _ => None,
        }
    }

    fn handle_setup(&mut self, conn: ConnId, node: NodeId, functions: Vec<RanFunction>) {
        self.stats.setups += 1;
        if self.rnib.contains_key(&node) {
            self.end_node_subscriptions(&node, None, "node re-established E2 setup");
        }
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        let mut kept = Vec::new();
        let mut kind = None;
        let mut cells = Vec::new();
        for f in functions {
            match Self::function_acceptable(&f) {
                Some((k, c)) => {
                    kind = kind.or(k);
                    cells.extend(c);
                    accepted.push(f.function_id);
                    kept.push(f);
                }
                None => rejected.push(f.function_id),
            }
        }
        self.rnib.insert(
            node.clone(),
            RnibEntry {
                node_id: node.clone(),
                node_kind: kind.unwrap_or(NodeKind::Du),
                functions: kept,
                connected: true,
                last_seen: self.now,
                conn,
                cells,
            },
        );
        self.conns.insert(conn, Some(node.clone()));
        self.mirror_rnib(&node);
        self.outbox.push((
            conn,
            E2apPdu::new(E2apMessage::SetupResponse {
                accepted_ids: accepted,
                rejected_ids: rejected,
            }),
        ));
        for slot in 0..self.slots.len() {
            if self.slots[slot].alive {
                self.events.push_back((slot, XappEvent::NodeUp(node.clone())));
            }
        }
    }

    fn handle_service_update(
        &mut self,
        conn: ConnId,
        node: &NodeId,
        added: Vec<RanFunction>,
        modified: Vec<RanFunction>,
        deleted: Vec<u16>,
    ) {
        let mut accepted = Vec::new();
        for f in added.into_iter().chain(modified) {
            if let Some((_, cells)) = Self::function_acceptable(&f) {
                let e = self.rnib.get_mut(node).expect("registered node");
                e.functions.retain(|x| x.function_id != f.function_id);
                if !cells.is_empty() {
                    e.cells = cells;
                }
                accepted.push(f.function_id);
                e.functions.push(f);
            }
        }
        for id in &deleted {
            let e = self.rnib.get_mut(node).expect("registered node");
            e.functions.retain(|x| x.function_id != *id);
            self.end_node_subscriptions(node, Some(*id), "RAN function deleted");
        }
        self.mirror_rnib(node);
        self.outbox.push((
            conn,
            E2apPdu::new(E2apMessage::ServiceUpdateAcknowledge {
                accepted_ids: accepted,
            }),
        ));
    }

    fn mirror_rnib(&mut self, node: &NodeId) {
        if let Some(e) = self.rnib.get(node) {
            let v = e.to_json();
            self.sdl
                .put(&Actor::Platform, "rnib", node.as_str(), v)
                .expect("platform may write rnib");
        }
    }

    fn mirror_uenib(&mut self, ue: UeId, node: &NodeId, cell: CellId, slice: Option<SliceId>) {
        let e = self.uenib.entry(ue).or_insert_with(|| UeNibEntry {
            ue_id: ue,
            contexts: Vec::new(),
        });
        e.contexts.retain(|(n, _, _)| n != node);
        e.contexts.push((node.clone(), cell, slice));
        let v = json!(e
            .contexts
            .iter()
            .map(|(n, c, s)| json!({"node": n.as_str(), "cell": c.0, "slice": s.map(|s| s.0)}))
            .collect::<Vec<_>>());
        self.sdl
            .put(&Actor::Platform, "uenib", &ue.0.to_string(), v)
            .expect("platform may write uenib");
    }

    /// Drops subscriptions on a node (optionally one function) without wire
    /// deletes, notifying subscribers.
    fn end_node_subscriptions(&mut self, node: &NodeId, function: Option<u16>, reason: &str) {
        let keys: Vec<SubKey> = self
            .subs
            .keys()
            .filter(|k| &k.node == node && function.is_none_or(|f| f == k.function_id))
            .cloned()
            .collect();
        for k in keys {
            let rec = self.subs.remove(&k).expect("listed");
            self.routes.remove(&rec.request_id);
            for (slot, h) in rec.subscribers {
                self.handles.remove(&h);
                self.slots[slot].handles.remove(&h);
                self.events.push_back((
                    slot,
                    XappEvent::SubscriptionEnded {
                        sub: h,
                        reason: reason.into(),
                    },
                ));
            }
        }
        self.inserts.retain(|_, p| &p.node != node);
    }

    // ---- subscriptions ----

    pub(crate) fn xapp_subscribe(
        &mut self,
        slot: usize,
        node: &NodeId,
        function_id: u16,
        trigger: Vec<u8>,
        actions: Vec<RicAction>,
    ) -> Result<SubHandle, RicError> {
        let entry = self
            .rnib
            .get(node)
            .filter(|e| e.connected)
            .ok_or_else(|| RicError::UnknownNode(node.clone()))?;
        if !entry.has_function(function_id) {
            return Err(RicError::UnknownFunction(function_id));
        }
        let key = SubKey::new(node, function_id, &trigger, &actions);
        let h = SubHandle(self.next_handle);
        self.next_handle += 1;
        self.handles.insert(h, (slot, key.clone()));
        self.slots[slot].handles.insert(h);
        if let Some(rec) = self.subs.get_mut(&key) {
            rec.subscribers.push((slot, h));
            if rec.state == SubState::Active {
                self.events.push_back((slot, XappEvent::SubscriptionActive(h)));
            }
            return Ok(h);
        }
        let request_id = self.next_request_id();
        self.keys_seen.insert(key.clone());
        self.routes.insert(request_id, key.clone());
        self.subs.insert(
            key.clone(),
            SubscriptionRecord {
                key,
                request_id,
                state: SubState::Pending,
                subscribers: vec![(slot, h)],
                actions: actions.clone(),
            },
        );
        self.stats.wire_subscriptions += 1;
        self.send(
            node,
            E2apMessage::SubscriptionRequest {
                request_id,
                function_id,
                event_trigger: trigger,
                actions,
            },
        );
        Ok(h)
    }

    pub(crate) fn xapp_unsubscribe(&mut self, slot: usize, h: SubHandle) {
        let Some((owner, key)) = self.handles.remove(&h) else {
            return;
        };
        debug_assert_eq!(owner, slot);
        self.slots[slot].handles.remove(&h);
        let Some(rec) = self.subs.get_mut(&key) else {
            return;
        };
        rec.subscribers.retain(|(_, x)| *x != h);
        if rec.subscribers.is_empty() {
            let rec = self.subs.remove(&key).expect("present");
            self.routes.remove(&rec.request_id);
            self.stats.wire_deletes += 1;
            let node = key.node.clone();
            self.inserts.retain(|_, p| !(p.node == node && p.slot == slot));
            self.send(
                &node,
                E2apMessage::SubscriptionDeleteRequest {
                    request_id: rec.request_id,
                    function_id: key.function_id,
                },
            );
        }
    }

    fn on_subscription_response(&mut self, request_id: RicRequestId) {
        let Some(key) = self.routes.get(&request_id) else {
            return;
        };
        let rec = self.subs.get_mut(key).expect("routed");
        if rec.state == SubState::Active {
            return;
        }
        rec.state = SubState::Active;
        for (slot, h) in rec.subscribers.clone() {
            self.events.push_back((slot, XappEvent::SubscriptionActive(h)));
        }
    }

    fn on_subscription_failure(&mut self, request_id: RicRequestId, cause: Cause) {
        let Some(key) = self.routes.remove(&request_id) else {
            return;
        };
        self.stats.subscription_failures += 1;
        let rec = self.subs.remove(&key).expect("routed");
        for (slot, h) in rec.subscribers {
            self.handles.remove(&h);
            self.slots[slot].handles.remove(&h);
            self.events.push_back((
                slot,
                XappEvent::SubscriptionFailed {
                    sub: h,
                    cause: cause.clone(),
                },
            ));
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn route_indication(
        &mut self,
        node: &NodeId,
        request_id: RicRequestId,
        action_id: u8,
        sequence_number: Option<u32>,
        indication_type: IndicationType,
        header: Vec<u8>,
        message: Vec<u8>,
        call_process_id: Option<Vec<u8>>,
    ) {
        self.stats.indications += 1;
        let Some(key) = self.routes.get(&request_id).cloned() else {
            self.stats.orphan_indications += 1;
            return;
        };
        let rec = &self.subs[&key];
        match indication_type {
            IndicationType::Report => {
                let mut kpm = None;
                if key.function_id == crate::sim::agent::KPM_FUNCTION_ID {
                    let decoded = match (
                        e2sm::decode_kpm(&header),
                        e2sm::decode_kpm(&message),
                        rec.kpm_definition(action_id),
                    ) {
                        (
                            Ok(KpmPayload::IndicationHeader(h)),
                            Ok(KpmPayload::IndicationMessage(records)),
                            Some(def),
                        ) => {
                            let ind = KpmIndication { header: h, records };
                            ind.conforms_to(&def).ok().map(|_| ind)
                        }
                        _ => None,
                    };
                    let Some(ind) = decoded else {
                        self.stats.malformed_indications += 1;
                        return;
                    };
                    for r in &ind.records {
                        self.record_kpm(node, r.scope, &r.metric, r.timestamp, r.value);
                        if let (KpmScope::Ue(u), "serving_cell") = (r.scope, r.metric.as_str()) {
                            self.mirror_uenib(u, node, CellId(r.value as u32), None);
                        }
                    }
                    kpm = Some(ind);
                }
                let rec = &self.subs[&key];
                for (slot, h) in rec.subscribers.clone() {
                    self.stats.deliveries += 1;
                    self.events.push_back((
                        slot,
                        XappEvent::Indication {
                            sub: h,
                            node: node.clone(),
                            sequence_number,
                            kpm: kpm.clone(),
                            header: header.clone(),
                            message: message.clone(),
                        },
                    ));
                }
            }
            IndicationType::Insert => {
                self.stats.inserts_received += 1;
                let insert = match e2sm::decode_rc(&message) {
                    Ok(RcPayload::Insert(i)) => i,
                    _ => {
                        self.stats.malformed_indications += 1;
                        return;
                    }
                };
                let cp = call_process_id.unwrap_or_else(|| insert.call_process_id.clone());
                let target = rec.subscribers.iter().copied().find(|(slot, _)| {
                    self.slots[*slot]
                        .desc
                        .can_control(RcDomain::ConnectedModeMobility)
                });
                let deadline = self.now + rec.time_to_wait();
                self.mirror_uenib(insert.ue_id, node, insert.serving_cell_id, None);
                let Some((slot, h)) = target else {
                    self.stats.inserts_unrouted += 1;
                    return;
                };
                self.stats.deliveries += 1;
                self.inserts.insert(
                    cp.clone(),
                    InsertPending {
                        node: node.clone(),
                        insert: insert.clone(),
                        deadline,
                        slot,
                    },
                );
                self.events.push_back((
                    slot,
                    XappEvent::Insert {
                        sub: h,
                        node: node.clone(),
                        insert,
                        deadline,
                    },
                ));
            }
        }
    }

    // ---- controls ----

    pub(crate) fn submit_control(
        &mut self,
        slot: usize,
        node: &NodeId,
        control: RcControl,
        in_reply_to: Option<Vec<u8>>,
    ) -> Result<ControlTicket, RicError> {
        if !self.rnib.get(node).is_some_and(|e| e.connected) {
            return Err(RicError::UnknownNode(node.clone()));
        }
        control
            .validate()
            .map_err(|e| RicError::InvalidControl(e.to_string()))?;
        let domain = control.domain();
        if !self.slots[slot].desc.can_control(domain) {
            return Err(RicError::UnsupportedDomain(domain));
        }
        let ticket = ControlTicket(self.next_ticket);
        self.next_ticket += 1;
        self.queued.push(QueuedControl {
            ticket,
            slot,
            node: node.clone(),
            control,
            in_reply_to,
            order: self.next_order,
        });
        self.next_order += 1;
        Ok(ticket)
    }

    pub(crate) fn deny_insert(
        &mut self,
        slot: usize,
        call_process_id: Vec<u8>,
    ) -> Result<ControlTicket, RicError> {
        let p = match self.inserts.get(&call_process_id) {
            Some(p) if p.slot == slot => p.clone(),
            _ => return Err(RicError::UnknownInsert),
        };
        self.inserts.remove(&call_process_id);
        self.stats.inserts_denied += 1;
        self.insert_log
            .push((call_process_id.clone(), InsertOutcome::Denied));
        let target_gid = self
            .rnib
            .get(&p.node)
            .and_then(|e| {
                e.cells
                    .iter()
                    .find(|c| c.cell_id == p.insert.candidate_target_cell_id)
            })
            .map_or(0, |c| c.global_id);
        let control = RcControl::HandoverCommand {
            ue_id: p.insert.ue_id,
            target_cell_global_id: target_gid,
        };
        let ticket = ControlTicket(self.next_ticket);
        self.next_ticket += 1;
        self.send_control(
            ticket,
            slot,
            &p.node,
            control,
            Some(call_process_id),
            ControlVerdict::Deny,
        );
        Ok(ticket)
    }

    fn send_control(
        &mut self,
        ticket: ControlTicket,
        slot: usize,
        node: &NodeId,
        control: RcControl,
        call_process_id: Option<Vec<u8>>,
        verdict: ControlVerdict,
    ) {
        let request_id = self.next_request_id();
        let header = e2sm::encode_rc(RcPayload::ControlHeader(RcControlHeader { verdict }))
            .expect("header encodes");
        let message = e2sm::encode_rc(RcPayload::Control(control.clone())).expect("validated control");
        self.stats.controls_sent += 1;
        self.inflight.insert(
            request_id,
            InflightControl {
                ticket,
                slot,
                node: node.clone(),
                control: (verdict == ControlVerdict::Execute).then_some(control),
                sent_at: self.now,
            },
        );
        self.send(
            node,
            E2apMessage::ControlRequest {
                request_id,
                function_id: crate::sim::agent::RC_FUNCTION_ID,
                call_process_id,
                header,
                message,
                ack_requested: true,
            },
        );
    }

    /// Resolves the controls queued at this instant: highest descriptor
    /// priority first (ties by name, then submission order), each passing
    /// through the lock table.
    fn arbitrate(&mut self) {
        let mut batch = std::mem::take(&mut self.queued);
        batch.sort_by(|a, b| {
            let (da, db) = (&self.slots[a.slot].desc, &self.slots[b.slot].desc);
            db.priority
                .cmp(&da.priority)
                .then_with(|| da.name.cmp(&db.name))
                .then(a.order.cmp(&b.order))
        });
        for q in batch {
            let name = self.slots[q.slot].desc.name.clone();
            let key = ConflictKey::for_control(&q.node, &q.control);
            match self.locks.check(&name, &key, self.now) {
                LockDecision::ConflictRejected { holder } => {
                    self.stats.conflicts_rejected += 1;
                    self.events.push_back((
                        q.slot,
                        XappEvent::ControlOutcome {
                            ticket: q.ticket,
                            result: ControlResult::ConflictRejected { holder },
                        },
                    ));
                }
                LockDecision::Pass => {
                    if let Some(cp) = &q.in_reply_to {
                        if self.inserts.remove(cp).is_some() {
                            self.stats.inserts_accepted += 1;
                            self.insert_log.push((cp.clone(), InsertOutcome::Accepted));
                        }
                    }
                    self.send_control(
                        q.ticket,
                        q.slot,
                        &q.node,
                        q.control,
                        q.in_reply_to,
                        ControlVerdict::Execute,
                    );
                }
            }
        }
    }

    fn on_control_result(&mut self, request_id: RicRequestId, result: ControlResult) {
        let Some(c) = self.inflight.remove(&request_id) else {
            return;
        };
        match &result {
            ControlResult::Acknowledged(_) => {
                self.stats.controls_acked += 1;
                if let Some(ctl) = &c.control {
                    self.after_ack(&c, ctl);
                }
            }
            _ => self.stats.controls_failed += 1,
        }
        if self.slots[c.slot].alive {
            self.events.push_back((
                c.slot,
                XappEvent::ControlOutcome {
                    ticket: c.ticket,
                    result,
                },
            ));
        }
    }

    fn after_ack(&mut self, c: &InflightControl, ctl: &RcControl) {
        let (cell, slice) = match ctl {
            RcControl::SlicePrbQuota {
                cell_id, slice_id, ..
            }
            | RcControl::SliceScheduler {
                cell_id, slice_id, ..
            } => (*cell_id, *slice_id),
            RcControl::HandoverCommand {
                ue_id,
                target_cell_global_id,
            } => {
                let cell = self.rnib.get(&c.node).and_then(|e| {
                    e.cells
                        .iter()
                        .find(|x| x.global_id == *target_cell_global_id)
                        .map(|x| x.cell_id)
                });
                if let Some(cell) = cell {
                    self.mirror_uenib(*ue_id, &c.node.clone(), cell, None);
                }
                return;
            }
            _ => return,
        };
        let Some(kind) = self
            .rnib
            .get(&c.node)
            .and_then(|e| e.slice_kind(cell, slice))
        else {
            return;
        };
        let (metric, higher) = objective_metric(kind);
        self.verifications_due.push(DueVerification {
            ticket: c.ticket,
            xapp: self.slots[c.slot].desc.name.clone(),
            target: ConflictKey::for_control(&c.node, ctl),
            scope: KpmScope::Slice(cell, slice),
            metric: metric.into(),
            higher_is_better: higher,
            applied_at: self.now,
            due: self.now + self.cfg.verify_window_ms,
        });
    }

    fn run_verifications(&mut self) {
        let now = self.now;
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.verifications_due)
            .into_iter()
            .partition(|d| d.due <= now);
        self.verifications_due = rest;
        for d in due {
            let series = self.kpm_series(&d.target.node, d.scope, &d.metric);
            let v = self.cfg.verify_window_ms;
            let t = d.applied_at;
            let before: Vec<f64> = series
                .iter()
                .filter(|(ts, _)| *ts + v >= t && *ts < t)
                .map(|x| x.1)
                .collect();
            let after: Vec<f64> = series
                .iter()
                .filter(|(ts, _)| *ts > t && *ts <= t + v)
                .map(|x| x.1)
                .collect();
            let outcome = verify(&before, &after, d.higher_is_better, self.cfg.verify_threshold);
            self.verifications.push(VerificationRecord {
                ticket: d.ticket,
                xapp: d.xapp,
                target: d.target,
                metric: d.metric,
                applied_at: d.applied_at,
                outcome,
            });
        }
    }

    // ---- the tick ----

    /// Runs everything scheduled for the current instant. Call after
    /// feeding this instant's inbound messages.
    pub fn tick(&mut self) {
        let now = self.now;
        let expired: Vec<Vec<u8>> = self
            .inserts
            .iter()
            .filter(|(_, p)| now >= p.deadline)
            .map(|(cp, _)| cp.clone())
            .collect();
        for cp in expired {
            let p = self.inserts.remove(&cp).expect("listed");
            self.stats.inserts_timed_out += 1;
            self.insert_log.push((cp.clone(), InsertOutcome::TimedOut));
            self.events
                .push_back((p.slot, XappEvent::InsertExpired { call_process_id: cp }));
        }
        let timed_out: Vec<RicRequestId> = self
            .inflight
            .iter()
            .filter(|(_, c)| now >= c.sent_at + self.cfg.control_timeout_ms)
            .map(|(id, _)| *id)
            .collect();
        for id in timed_out {
            let c = self.inflight.remove(&id).expect("listed");
            self.stats.controls_timed_out += 1;
            if self.slots[c.slot].alive {
                self.events.push_back((
                    c.slot,
                    XappEvent::ControlOutcome {
                        ticket: c.ticket,
                        result: ControlResult::Timeout,
                    },
                ));
            }
        }
        for slot in 0..self.slots.len() {
            let s = &self.slots[slot];
            if s.alive && s.desc.loop_period_ms.is_some_and(|p| p > 0 && now.is_multiple_of(p)) {
                self.events.push_back((slot, XappEvent::Timer));
            }
        }
        self.run_until_quiescent();
        self.run_verifications();
    }

    /// Delivers queued events and arbitrates controls until neither is left.
    pub fn run_until_quiescent(&mut self) {
        loop {
            while let Some((slot, ev)) = self.events.pop_front() {
                if self.slots[slot].alive {
                    self.with_app(slot, |app, ctx| app.on_event(ctx, &ev));
                }
            }
            if self.queued.is_empty() {
                break;
            }
            self.arbitrate();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e2sm::{KpmActionDefinition, KpmEventTrigger, KpmFunctionDefinition, SchedulerKind};

    struct Quiet;
    impl XApp for Quiet {
        fn on_event(&mut self, _ctx: &mut XappContext<'_>, _ev: &XappEvent) {}
    }

    fn kpm_function() -> RanFunction {
        RanFunction {
            function_id: 1,
            name: "ORAN-E2SM-KPM".into(),
            revision: 1,
            definition: e2sm::encode_kpm(KpmPayload::FunctionDefinition(KpmFunctionDefinition {
                node_kinds: vec![NodeKind::Du],
                cells: vec![CellConfig {
                    cell_id: CellId(0),
                    global_id: 0x10000,
                    total_prb: 50,
                    slices: vec![(SliceId(0), SliceKind::Urllc)],
                }],
            }))
            .unwrap(),
        }
    }

    fn ric_with_node() -> Ric {
        let mut r = Ric::default();
        r.connection_opened(0);
        r.handle_e2(
            0,
            E2apPdu::new(E2apMessage::SetupRequest {
                node_id: "du-0".into(),
                functions: vec![
                    kpm_function(),
                    RanFunction {
                        function_id: 7,
                        name: "junk".into(),
                        revision: 1,
                        definition: vec![0xFF],
                    },
                ],
            }),
        );
        r
    }

    fn trigger(p: u32) -> Vec<u8> {
        e2sm::encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger {
            report_period_ms: p,
        }))
        .unwrap()
    }

    fn report_action() -> Vec<RicAction> {
        vec![RicAction {
            action_id: 1,
            action_type: ActionType::Report,
            definition: e2sm::encode_kpm(KpmPayload::ActionDefinition(KpmActionDefinition {
                node_kind: NodeKind::Du,
                scope: KpmScope::Node,
                metrics: vec!["tx_bytes".into()],
            }))
            .unwrap(),
            subsequent: None,
        }]
    }

    #[test]
    fn setup_rejects_undecodable_functions() {
        let mut r = ric_with_node();
        let out = r.take_outbox();
        assert!(matches!(
            &out[0].1.body,
            E2apMessage::SetupResponse { accepted_ids, rejected_ids }
                if accepted_ids == &vec![1] && rejected_ids == &vec![7]
        ));
        assert_eq!(r.rnib_entry(&NodeId::new("du-0")).unwrap().functions.len(), 1);
        assert!(r.sdl().get("rnib", "du-0").is_ok());
    }

    #[test]
    fn merge_and_teardown() {
        let mut r = ric_with_node();
        r.take_outbox();
        let node = NodeId::new("du-0");
        for n in ["a", "b"] {
            r.onboard(XappDescriptor::new(n, 1)).unwrap();
            r.deploy(n, Box::new(Quiet)).unwrap();
        }
        let ha = r.xapp_subscribe(0, &node, 1, trigger(100), report_action()).unwrap();
        let hb = r.xapp_subscribe(1, &node, 1, trigger(100), report_action()).unwrap();
        r.xapp_subscribe(1, &node, 1, trigger(200), report_action()).unwrap();
        assert_eq!(r.stats().wire_subscriptions, 2);
        assert_eq!(
            r.xapp_subscribe(0, &node, 99, trigger(100), report_action()),
            Err(RicError::UnknownFunction(99))
        );
        r.xapp_unsubscribe(0, ha);
        assert_eq!(r.stats().wire_deletes, 0);
        r.xapp_unsubscribe(1, hb);
        assert_eq!(r.stats().wire_deletes, 1);
    }

    #[test]
    fn capability_gate() {
        let mut r = ric_with_node();
        r.onboard(XappDescriptor::new("a", 1)).unwrap();
        r.deploy("a", Box::new(Quiet)).unwrap();
        let ctl = RcControl::SliceScheduler {
            cell_id: CellId(0),
            slice_id: SliceId(0),
            scheduler: SchedulerKind::RoundRobin,
        };
        assert_eq!(
            r.submit_control(0, &NodeId::new("du-0"), ctl, None),
            Err(RicError::UnsupportedDomain(RcDomain::RadioResourceAllocation))
        );
    }

    #[test]
    fn lifecycle_errors() {
        let mut r = Ric::default();
        r.onboard(XappDescriptor::new("a", 1)).unwrap();
        assert!(matches!(
            r.onboard(XappDescriptor::new("a", 1)),
            Err(RicError::DuplicateName(_))
        ));
        assert!(matches!(
            r.deploy("b", Box::new(Quiet)),
            Err(RicError::NotOnboarded(_))
        ));
        assert!(matches!(r.publish(None, "nope", "k", None), Err(RicError::UndeclaredTopic(_))));
    }
}
