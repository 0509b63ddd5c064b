//! E2 termination on the simulated node side: setup, subscriptions with
//! report timers, insert indications, control handling, and the bulk PM
//! files the node exposes over O1.

use super::{Counters, Sim, SimError, SimEvent, WindowSample};
use crate::e2ap::{
    ActionType, Cause, CauseKind, E2apMessage, E2apPdu, IndicationType, RanFunction, RicRequestId,
    TimeToWait,
};
use crate::e2sm::{
    self, kpm, CellConfig, ControlVerdict, KpmActionDefinition, KpmFunctionDefinition,
    KpmIndicationHeader, KpmPayload, KpmRecord, KpmScope, NodeKind, RcControlHeader, RcDomain,
    RcEventTrigger, RcFunctionDefinition, RcOutcome, RcPayload, ServiceModelId, SmError, SmPayload,
};
use crate::ids::{CellId, Millis, NodeId, SliceId};
use std::collections::BTreeMap;
use std::fmt::Write;

pub const KPM_FUNCTION_ID: u16 = 1;
pub const RC_FUNCTION_ID: u16 = 2;
pub const NI_FUNCTION_ID: u16 = 3;

/// Metrics written into each PM file, per slice.
pub const PM_METRICS: &[&str] = &[
    "tx_bytes",
    "tx_packets",
    "buffer_bytes",
    "latency_proxy_ms",
    "prb_granted",
    "prb_requested",
];

pub const CSV_HEADER: &str = "time_ms,node,cell,slice,metric,value";

#[derive(Debug, Clone, PartialEq)]
pub struct PmFile {
    pub node: NodeId,
    /// Index of the reporting interval that just closed (1-based).
    pub interval: u64,
    pub csv: String,
}

#[derive(Debug, Clone)]
struct KpmAction {
    action_id: u8,
    def: KpmActionDefinition,
    sn: u32,
    last_report: Millis,
    snapshots: BTreeMap<KpmScope, Counters>,
}

#[derive(Debug, Clone)]
enum AgentSub {
    Kpm {
        period: Millis,
        start: Millis,
        actions: Vec<KpmAction>,
    },
    RcInsert {
        action_id: u8,
        sn: u32,
    },
}

pub struct E2Agent {
    node: NodeId,
    functions: Vec<RanFunction>,
    subs: BTreeMap<RicRequestId, AgentSub>,
    pm_interval: Millis,
    pm_snapshots: BTreeMap<(CellId, SliceId), Counters>,
    pm_index: u64,
    /// Accepted report-period band.
    pub period_bounds: (u32, u32),
}

fn failure(request_id: RicRequestId, kind: CauseKind, detail: impl Into<String>) -> E2apPdu {
    E2apPdu::new(E2apMessage::SubscriptionFailure {
        request_id,
        cause: Cause::new(kind, detail),
    })
}

impl E2Agent {
    /// Builds the agent and its RAN function list from the node's simulated cells.
    pub fn new(sim: &Sim, node: &NodeId, models: &[String], pm_interval: Millis) -> Self {
        let mut functions = Vec::new();
        for m in models {
            let f = match m.as_str() {
                "kpm" => {
                    let cells = sim
                        .cells_of(node)
                        .map(|c| CellConfig {
                            cell_id: c.id,
                            global_id: c.global_id,
                            total_prb: c.total_prb,
                            slices: c.slices.values().map(|s| (s.id, s.kind)).collect(),
                        })
                        .collect();
                    let def = KpmPayload::FunctionDefinition(KpmFunctionDefinition {
                        node_kinds: NodeKind::ALL.to_vec(),
                        cells,
                    });
                    (KPM_FUNCTION_ID, ServiceModelId::Kpm, SmPayload::Kpm(def))
                }
                "rc" => {
                    let domains = sim.node_domains(node).unwrap_or(&[]).to_vec();
                    let def = RcPayload::FunctionDefinition(RcFunctionDefinition {
                        domains,
                        tunables: e2sm::rc::TUNABLES.iter().map(|(n, _)| n.to_string()).collect(),
                    });
                    (RC_FUNCTION_ID, ServiceModelId::Rc, SmPayload::Rc(def))
                }
                "ni" => (NI_FUNCTION_ID, ServiceModelId::Ni, SmPayload::Ni(Vec::new())),
                _ => continue,
            };
            functions.push(RanFunction {
                function_id: f.0,
                name: f.1.function_name().into(),
                revision: 1,
                definition: e2sm::sm_encode(&f.2).expect("function definitions are valid"),
            });
        }
        Self {
            node: node.clone(),
            functions,
            subs: BTreeMap::new(),
            pm_interval,
            pm_snapshots: BTreeMap::new(),
            pm_index: 0,
            period_bounds: (kpm::MIN_REPORT_PERIOD_MS, kpm::MAX_REPORT_PERIOD_MS),
        }
    }

    pub fn node(&self) -> &NodeId {
        &self.node
    }

    pub fn functions(&self) -> &[RanFunction] {
        &self.functions
    }

    pub fn active_subscriptions(&self) -> usize {
        self.subs.len()
    }

    pub fn setup_request(&self) -> E2apPdu {
        E2apPdu::new(E2apMessage::SetupRequest {
            node_id: self.node.to_string(),
            functions: self.functions.clone(),
        })
    }

    /// Drops a RAN function and reports it through a service update. Any
    /// subscriptions on it end locally.
    pub fn remove_function(&mut self, sim: &mut Sim, function_id: u16) -> E2apPdu {
        self.functions.retain(|f| f.function_id != function_id);
        if function_id == KPM_FUNCTION_ID {
            self.subs.retain(|_, s| !matches!(s, AgentSub::Kpm { .. }));
        }
        if function_id == RC_FUNCTION_ID {
            self.subs.retain(|_, s| !matches!(s, AgentSub::RcInsert { .. }));
            sim.set_insert_wait(&self.node, None);
        }
        E2apPdu::new(E2apMessage::ServiceUpdate {
            added: vec![],
            modified: vec![],
            deleted: vec![function_id],
        })
    }

    pub fn handle(&mut self, sim: &mut Sim, pdu: E2apPdu) -> Vec<E2apPdu> {
        match pdu.body {
            E2apMessage::SubscriptionRequest {
                request_id,
                function_id,
                event_trigger,
                actions,
            } => vec![self.subscribe(sim, request_id, function_id, &event_trigger, &actions)],
            E2apMessage::SubscriptionDeleteRequest { request_id, .. } => {
                match self.subs.remove(&request_id) {
                    Some(AgentSub::RcInsert { .. }) => sim.set_insert_wait(&self.node, None),
                    Some(_) => {}
                    None => {
                        return vec![E2apPdu::new(E2apMessage::ErrorIndication {
                            cause: Cause::new(
                                CauseKind::Rejected,
                                format!("no subscription {}/{}", request_id.requestor_id, request_id.instance_id),
                            ),
                        })]
                    }
                }
                vec![E2apPdu::new(E2apMessage::SubscriptionDeleteResponse { request_id })]
            }
            E2apMessage::ControlRequest {
                request_id,
                function_id,
                call_process_id,
                header,
                message,
                ack_requested,
            } => {
                let result = self.control(sim, function_id, call_process_id.as_deref(), &header, &message);
                match result {
                    Ok(summary) if ack_requested => {
                        let outcome = e2sm::encode_rc(RcPayload::Outcome(RcOutcome { summary }))
                            .expect("outcome encodes");
                        vec![E2apPdu::new(E2apMessage::ControlAcknowledge { request_id, outcome })]
                    }
                    Ok(_) => vec![],
                    Err(cause) => vec![E2apPdu::new(E2apMessage::ControlFailure { request_id, cause })],
                }
            }
            E2apMessage::SetupResponse { .. }
            | E2apMessage::ServiceUpdateAcknowledge { .. }
            | E2apMessage::ErrorIndication { .. } => vec![],
            other => vec![E2apPdu::new(E2apMessage::ErrorIndication {
                cause: Cause::new(
                    CauseKind::Unsupported,
                    format!("unexpected {} at E2 node", other.name()),
                ),
            })],
        }
    }

    fn subscribe(
        &mut self,
        sim: &mut Sim,
        request_id: RicRequestId,
        function_id: u16,
        trigger: &[u8],
        actions: &[crate::e2ap::RicAction],
    ) -> E2apPdu {
        if self.subs.contains_key(&request_id) {
            return failure(request_id, CauseKind::Conflict, "request id already in use");
        }
        if !self.functions.iter().any(|f| f.function_id == function_id) {
            return failure(request_id, CauseKind::Unsupported, format!("no RAN function {function_id}"));
        }
        let mut admitted = Vec::new();
        let mut rejected = Vec::new();
        let sub = match function_id {
            KPM_FUNCTION_ID => {
                let period = match e2sm::decode_kpm(trigger) {
                    Ok(KpmPayload::EventTrigger(t)) => {
                        if let Err(e) = t.validate_in(self.period_bounds.0, self.period_bounds.1) {
                            return failure(request_id, CauseKind::Rejected, e.to_string());
                        }
                        Millis::from(t.report_period_ms)
                    }
                    _ => return failure(request_id, CauseKind::Rejected, "bad KPM event trigger"),
                };
                let mut states = Vec::new();
                for a in actions {
                    let def = match (a.action_type, e2sm::decode_kpm(&a.definition)) {
                        (ActionType::Report, Ok(KpmPayload::ActionDefinition(d)))
                            if self.scope_exists(sim, &d.scope) =>
                        {
                            d
                        }
                        _ => {
                            rejected.push(a.action_id);
                            continue;
                        }
                    };
                    admitted.push(a.action_id);
                    states.push(KpmAction {
                        action_id: a.action_id,
                        def,
                        sn: 0,
                        last_report: sim.now(),
                        snapshots: BTreeMap::new(),
                    });
                }
                if states.is_empty() {
                    return failure(request_id, CauseKind::Rejected, "no admissible actions");
                }
                for s in &mut states {
                    s.snapshots = self.scope_counters(sim, &s.def.scope);
                }
                AgentSub::Kpm {
                    period,
                    start: sim.now(),
                    actions: states,
                }
            }
            RC_FUNCTION_ID => {
                if !matches!(
                    e2sm::decode_rc(trigger),
                    Ok(RcPayload::EventTrigger(RcEventTrigger::A3))
                ) {
                    return failure(request_id, CauseKind::Rejected, "bad RC event trigger");
                }
                if self
                    .subs
                    .values()
                    .any(|s| matches!(s, AgentSub::RcInsert { .. }))
                {
                    return failure(request_id, CauseKind::Conflict, "insert subscription already active");
                }
                let mut chosen = None;
                for a in actions {
                    let ok = a.action_type == ActionType::Insert
                        && chosen.is_none()
                        && matches!(
                            e2sm::decode_rc(&a.definition),
                            Ok(RcPayload::ActionDefinition(RcDomain::ConnectedModeMobility))
                        )
                        && sim
                            .node_domains(&self.node)
                            .is_some_and(|d| d.contains(&RcDomain::ConnectedModeMobility));
                    if ok {
                        let wait = a
                            .subsequent
                            .map(|s| s.time_to_wait)
                            .unwrap_or(TimeToWait::W10ms);
                        chosen = Some((a.action_id, wait));
                        admitted.push(a.action_id);
                    } else {
                        rejected.push(a.action_id);
                    }
                }
                let Some((action_id, wait)) = chosen else {
                    return failure(request_id, CauseKind::Unsupported, "no admissible insert action");
                };
                sim.set_insert_wait(&self.node, Some(wait.millis()));
                AgentSub::RcInsert { action_id, sn: 0 }
            }
            _ => {
                return failure(
                    request_id,
                    CauseKind::Unsupported,
                    format!("function {function_id} offers no subscriptions"),
                )
            }
        };
        self.subs.insert(request_id, sub);
        E2apPdu::new(E2apMessage::SubscriptionResponse {
            request_id,
            admitted_action_ids: admitted,
            rejected_action_ids: rejected,
        })
    }

    fn control(
        &mut self,
        sim: &mut Sim,
        function_id: u16,
        call_process_id: Option<&[u8]>,
        header: &[u8],
        message: &[u8],
    ) -> Result<String, Cause> {
        if function_id != RC_FUNCTION_ID || !self.functions.iter().any(|f| f.function_id == function_id) {
            return Err(Cause::new(
                CauseKind::Unsupported,
                format!("function {function_id} accepts no control"),
            ));
        }
        let sm_cause = |e: SmError| match e {
            SmError::UnsupportedDomain(_) => Cause::new(CauseKind::Unsupported, e.to_string()),
            _ => Cause::new(CauseKind::Rejected, e.to_string()),
        };
        let verdict = match e2sm::decode_rc(header).map_err(sm_cause)? {
            RcPayload::ControlHeader(RcControlHeader { verdict }) => verdict,
            _ => return Err(Cause::new(CauseKind::Rejected, "control header expected")),
        };
        let control = match e2sm::decode_rc(message).map_err(sm_cause)? {
            RcPayload::Control(c) => c,
            _ => return Err(Cause::new(CauseKind::Rejected, "control message expected")),
        };
        let sim_cause = |e: SimError| match e {
            SimError::UnsupportedDomain(_) => Cause::new(CauseKind::Unsupported, e.to_string()),
            _ => Cause::new(CauseKind::Rejected, e.to_string()),
        };
        match call_process_id {
            Some(cp) => {
                let ctl = (verdict == ControlVerdict::Execute).then_some(&control);
                sim.reply_insert(&self.node, cp, verdict, ctl).map_err(sim_cause)
            }
            None if verdict == ControlVerdict::Deny => {
                Err(Cause::new(CauseKind::Rejected, "deny without call process"))
            }
            None => sim.apply_control(&self.node, &control).map_err(sim_cause),
        }
    }

    fn scope_exists(&self, sim: &Sim, scope: &KpmScope) -> bool {
        match scope {
            KpmScope::Node => true,
            KpmScope::Cell(c) => sim.cell(*c).is_some_and(|c| c.node == self.node),
            KpmScope::Slice(c, s) => sim
                .cell(*c)
                .is_some_and(|c| c.node == self.node && c.slices.contains_key(s)),
            KpmScope::Ue(u) => sim.ue(*u).is_some(),
        }
    }

    /// Record scopes covered by a requested scope, with their cumulative counters.
    fn scope_counters(&self, sim: &Sim, scope: &KpmScope) -> BTreeMap<KpmScope, Counters> {
        let mut out = BTreeMap::new();
        match scope {
            KpmScope::Ue(u) => {
                if let Some(ue) = sim.ue(*u) {
                    out.insert(*scope, ue.counters);
                }
            }
            _ => {
                for c in sim.cells_of(&self.node) {
                    for s in c.slices.values() {
                        let rs = KpmScope::Slice(c.id, s.id);
                        if rs.within(scope) {
                            out.insert(rs, s.counters);
                        }
                    }
                }
            }
        }
        out
    }

    fn gauges(&self, sim: &Sim, scope: &KpmScope) -> (u64, u64) {
        match scope {
            KpmScope::Slice(c, s) => (sim.slice_buffer(*c, *s), sim.connected_ues(*c, *s)),
            KpmScope::Ue(u) => sim.ue(*u).map_or((0, 0), |ue| {
                let here = sim.cell(ue.cell).is_some_and(|c| c.node == self.node);
                (ue.buffer_bytes, u64::from(here))
            }),
            _ => (0, 0),
        }
    }

    /// Emits inserts raised during the last step and any reports now due.
    pub fn after_step(&mut self, sim: &Sim, events: &[SimEvent]) -> Vec<E2apPdu> {
        let now = sim.now();
        let mut out = Vec::new();
        for ev in events {
            let SimEvent::Insert { node, insert } = ev else {
                continue;
            };
            if node != &self.node {
                continue;
            }
            let Some((request_id, AgentSub::RcInsert { action_id, sn })) = self
                .subs
                .iter_mut()
                .find(|(_, s)| matches!(s, AgentSub::RcInsert { .. }))
            else {
                continue;
            };
            *sn += 1;
            out.push(E2apPdu::new(E2apMessage::Indication {
                request_id: *request_id,
                function_id: RC_FUNCTION_ID,
                action_id: *action_id,
                sequence_number: Some(*sn),
                indication_type: IndicationType::Insert,
                header: e2sm::encode_rc(RcPayload::EventTrigger(RcEventTrigger::A3)).unwrap(),
                message: e2sm::encode_rc(RcPayload::Insert(insert.clone())).unwrap(),
                call_process_id: Some(insert.call_process_id.clone()),
            }));
        }
        let ids: Vec<RicRequestId> = self.subs.keys().copied().collect();
        for rid in ids {
            let due = match &self.subs[&rid] {
                AgentSub::Kpm { period, start, .. } => now > *start && (now - start).is_multiple_of(*period),
                AgentSub::RcInsert { .. } => false,
            };
            if !due {
                continue;
            }
            let mut actions = match self.subs.remove(&rid) {
                Some(AgentSub::Kpm { period, start, actions }) => (period, start, actions),
                _ => unreachable!(),
            };
            for a in &mut actions.2 {
                out.push(self.report(sim, rid, a));
            }
            self.subs.insert(
                rid,
                AgentSub::Kpm {
                    period: actions.0,
                    start: actions.1,
                    actions: actions.2,
                },
            );
        }
        out
    }

    fn report(&self, sim: &Sim, request_id: RicRequestId, a: &mut KpmAction) -> E2apPdu {
        let now = sim.now();
        let current = self.scope_counters(sim, &a.def.scope);
        let mut records = Vec::new();
        for (scope, counters) in &current {
            let base = a.snapshots.get(scope).copied().unwrap_or_default();
            let (buffer, connected) = self.gauges(sim, scope);
            let sample = WindowSample {
                delta: counters.since(&base),
                buffer_bytes: buffer,
                connected_ues: connected,
                window_ms: now - a.last_report,
            };
            for m in &a.def.metrics {
                if let Some(v) = sample.metric(m) {
                    records.push(KpmRecord {
                        metric: m.clone(),
                        scope: *scope,
                        timestamp: now,
                        value: v,
                    });
                }
            }
        }
        a.sn += 1;
        let header = KpmIndicationHeader {
            node_id: self.node.to_string(),
            collection_start: a.last_report,
        };
        a.last_report = now;
        a.snapshots = current;
        E2apPdu::new(E2apMessage::Indication {
            request_id,
            function_id: KPM_FUNCTION_ID,
            action_id: a.action_id,
            sequence_number: Some(a.sn),
            indication_type: IndicationType::Report,
            header: e2sm::encode_kpm(KpmPayload::IndicationHeader(header)).unwrap(),
            message: e2sm::encode_kpm(KpmPayload::IndicationMessage(records)).unwrap(),
            call_process_id: None,
        })
    }

    /// Closes a PM reporting interval when one ends at the current instant.
    pub fn pm_file(&mut self, sim: &Sim) -> Option<PmFile> {
        let now = sim.now();
        if self.pm_interval == 0 || now == 0 || !now.is_multiple_of(self.pm_interval) {
            return None;
        }
        self.pm_index += 1;
        let mut csv = String::new();
        csv.push_str(CSV_HEADER);
        csv.push('\n');
        for c in sim.cells_of(&self.node) {
            for s in c.slices.values() {
                let base = self.pm_snapshots.get(&(c.id, s.id)).copied().unwrap_or_default();
                let sample = WindowSample {
                    delta: s.counters.since(&base),
                    buffer_bytes: sim.slice_buffer(c.id, s.id),
                    connected_ues: sim.connected_ues(c.id, s.id),
                    window_ms: self.pm_interval,
                };
                for m in PM_METRICS {
                    let _ = writeln!(
                        csv,
                        "{now},{},{},{},{m},{}",
                        self.node,
                        c.id,
                        s.id,
                        sample.metric(m).unwrap()
                    );
                }
                self.pm_snapshots.insert((c.id, s.id), s.counters);
            }
        }
        Some(PmFile {
            node: self.node.clone(),
            interval: self.pm_index,
            csv,
        })
    }
}
