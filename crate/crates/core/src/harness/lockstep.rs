//! Lockstep protocol between the RAN side (simulator, E2 agents, non-RT
//! RIC) and the near-RT RIC.
//!
//! Every peer connection opens with a JSON hello. Per tick the RAN side
//! sends its queued frames, then `{"sync":"tick","t","counts"}` on the sync
//! connection, where `counts[0]` is the number of A1 frames and
//! `counts[1 + i]` the number of E2 frames sent to node connection `i`. The
//! RIC reads exactly those frames, runs one tick, writes its replies and
//! answers `{"reply":"done","counts"}` with the same layout. `{"sync":"end"}`
//! is answered with the RIC summary.

use super::capture::{append_record, CaptureRecord, Direction};
use super::scenario::{EventAction, Scenario};
use super::HarnessError;
use crate::a1::{A1Policy, A1Reply, A1Request};
use crate::e2ap::{self, E2apPdu};
use crate::ids::{CellId, Millis, NodeId, SliceId, SliceKind};
use crate::nonrt::{EiRegistry, FileReady, ForecastRapp, HeartbeatMonitor, PmCollector, PolicyStore, FORECAST_TOPIC};
use crate::ric::{Ric, RicConfig, RicStats};
use crate::sim::{Counters, E2Agent, Sim, WindowSample};
use crate::transport::{Connection, LoopbackListener, TcpFrameListener};
use crate::xapps::{PolicyModel, SlicingObjectives, EVAL_WINDOW_MS};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "hello", rename_all = "snake_case")]
pub(crate) enum Hello {
    Sync {
        scenario: Box<Scenario>,
        model_path: Option<String>,
        nodes: usize,
    },
    A1,
    Node {
        index: usize,
    },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "sync", rename_all = "snake_case")]
pub(crate) enum SyncMsg {
    Tick { t: Millis, counts: Vec<usize> },
    End,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "reply", rename_all = "snake_case")]
pub(crate) enum SyncReply {
    Done { counts: Vec<usize> },
    Summary(Box<RicSummary>),
}

/// End-of-run state the RIC hands back to the RAN side.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RicSummary {
    pub stats: RicStats,
    pub sinks: BTreeMap<String, String>,
    pub xapps: BTreeMap<String, Value>,
    pub metrics_csv: String,
    pub subscription_keys: u64,
    pub pending_inserts: u64,
    pub pending_controls: u64,
    pub verifications: u64,
    pub undecodable_frames: u64,
}

fn send_json<T: Serialize>(c: &mut dyn Connection, v: &T) -> Result<(), HarnessError> {
    let bytes = serde_json::to_vec(v).expect("protocol messages serialize");
    c.send(&bytes).map_err(|e| HarnessError::Transport(e.to_string()))
}

fn recv_frame(c: &mut dyn Connection) -> Result<Vec<u8>, HarnessError> {
    c.recv()
        .ok_or_else(|| HarnessError::Transport("peer closed the connection".into()))
}

fn recv_json<T: DeserializeOwned>(c: &mut dyn Connection) -> Result<T, HarnessError> {
    let f = recv_frame(c)?;
    serde_json::from_slice(&f).map_err(|e| HarnessError::Protocol(e.to_string()))
}

pub trait Acceptor {
    fn accept_conn(&mut self) -> Result<Box<dyn Connection>, HarnessError>;
}

impl Acceptor for LoopbackListener {
    fn accept_conn(&mut self) -> Result<Box<dyn Connection>, HarnessError> {
        self.accept()
            .map(|c| Box::new(c) as Box<dyn Connection>)
            .ok_or_else(|| HarnessError::Transport("loopback listener closed".into()))
    }
}

impl Acceptor for TcpFrameListener {
    fn accept_conn(&mut self) -> Result<Box<dyn Connection>, HarnessError> {
        self.accept()
            .map(|c| Box::new(c) as Box<dyn Connection>)
            .map_err(|e| HarnessError::Transport(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// RIC side

pub struct RicServer {
    ric: Ric,
    sync: Box<dyn Connection>,
    a1: Box<dyn Connection>,
    nodes: Vec<Box<dyn Connection>>,
    undecodable: u64,
}

impl RicServer {
    /// Accepts the sync, A1 and node connections of one run and deploys
    /// the scenario's xApps. `candidate` is an unpublished model for the
    /// slicing xApp (in-process validation only).
    pub fn accept(acceptor: &mut dyn Acceptor) -> Result<Self, HarnessError> {
        Self::accept_with(acceptor, None)
    }

    pub(crate) fn accept_with(
        acceptor: &mut dyn Acceptor,
        candidate: Option<&PolicyModel>,
    ) -> Result<Self, HarnessError> {
        let mut sync = None;
        let mut a1 = None;
        let mut nodes: BTreeMap<usize, Box<dyn Connection>> = BTreeMap::new();
        let mut setup = None;
        loop {
            if let (Some(_), Some(_), Some((_, _, n))) = (&sync, &a1, &setup) {
                if nodes.len() == *n {
                    break;
                }
            }
            let mut c = acceptor.accept_conn()?;
            match recv_json::<Hello>(c.as_mut())? {
                Hello::Sync {
                    scenario,
                    model_path,
                    nodes: n,
                } => {
                    setup = Some((scenario, model_path, n));
                    sync = Some(c);
                }
                Hello::A1 => a1 = Some(c),
                Hello::Node { index } => {
                    nodes.insert(index, c);
                }
            }
        }
        let (scenario, model_path, n) = setup.expect("checked above");
        if nodes.keys().copied().ne(0..n) {
            return Err(HarnessError::Protocol("node connection indices are not 0..n".into()));
        }
        let mut ric = Ric::new(RicConfig::default());
        for spec in &scenario.xapps {
            let (desc, app) = spec
                .build(model_path.as_deref(), candidate)
                .map_err(|e| HarnessError::Ric(format!("xApp `{}`: {e}", spec.name())))?;
            let name = desc.name.clone();
            ric.onboard(desc).map_err(|e| HarnessError::Ric(e.to_string()))?;
            ric.deploy(&name, app).map_err(|e| HarnessError::Ric(e.to_string()))?;
        }
        for i in 0..n {
            ric.connection_opened(i);
        }
        Ok(Self {
            ric,
            sync: sync.expect("checked above"),
            a1: a1.expect("checked above"),
            nodes: nodes.into_values().collect(),
            undecodable: 0,
        })
    }

    pub fn ric(&self) -> &Ric {
        &self.ric
    }

    pub fn serve(mut self) -> Result<(), HarnessError> {
        while self.step()? {}
        Ok(())
    }

    /// Handles one sync message. Returns false after the end of the run.
    pub fn step(&mut self) -> Result<bool, HarnessError> {
        let (t, counts) = match recv_json::<SyncMsg>(self.sync.as_mut())? {
            SyncMsg::End => {
                let summary = self.summary();
                send_json(self.sync.as_mut(), &SyncReply::Summary(Box::new(summary)))?;
                return Ok(false);
            }
            SyncMsg::Tick { t, counts } => (t, counts),
        };
        if counts.len() != self.nodes.len() + 1 {
            return Err(HarnessError::Protocol(format!(
                "tick {t}: {} counts for {} connections",
                counts.len(),
                self.nodes.len() + 1
            )));
        }
        self.ric.set_now(t);
        for _ in 0..counts[0] {
            let f = recv_frame(self.a1.as_mut())?;
            match serde_json::from_slice::<A1Request>(&f) {
                Ok(req) => self.ric.handle_a1(req),
                Err(_) => self.undecodable += 1,
            }
        }
        for (i, &n) in counts[1..].iter().enumerate() {
            for _ in 0..n {
                let f = recv_frame(self.nodes[i].as_mut())?;
                match e2ap::decode(&f) {
                    Ok(pdu) => self.ric.handle_e2(i, pdu),
                    Err(_) => self.undecodable += 1,
                }
            }
        }
        self.ric.tick();
        let mut out = vec![0usize; self.nodes.len() + 1];
        for r in self.ric.take_a1_replies() {
            send_json(self.a1.as_mut(), &r)?;
            out[0] += 1;
        }
        for (conn, pdu) in self.ric.take_outbox() {
            let bytes = e2ap::encode(&pdu).map_err(|e| HarnessError::Ric(e.to_string()))?;
            self.nodes[conn]
                .send(&bytes)
                .map_err(|e| HarnessError::Transport(e.to_string()))?;
            out[conn + 1] += 1;
        }
        send_json(self.sync.as_mut(), &SyncReply::Done { counts: out })?;
        Ok(true)
    }

    fn summary(&mut self) -> RicSummary {
        let ric = &mut self.ric;
        RicSummary {
            stats: ric.stats().clone(),
            xapps: ric.xapp_statuses(),
            metrics_csv: ric.metrics_csv(),
            subscription_keys: ric.distinct_subscription_keys() as u64,
            pending_inserts: ric.pending_inserts().count() as u64,
            pending_controls: ric.inflight_controls() as u64,
            verifications: ric.verifications().len() as u64,
            undecodable_frames: self.undecodable,
            sinks: ric.take_sinks(),
        }
    }
}

// ---------------------------------------------------------------------------
// RAN side

/// Per (cell, slice) objective bookkeeping over evaluation windows.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SliceTally {
    pub cell: u32,
    pub slice: u8,
    pub kind: Option<SliceKind>,
    pub windows: u64,
    pub violations: u64,
}

pub(crate) struct Evaluator {
    warmup: Millis,
    snaps: BTreeMap<(CellId, SliceId), Counters>,
    pub(crate) tallies: BTreeMap<(CellId, SliceId), SliceTally>,
    pub(crate) windows: u64,
    pub(crate) violated: u64,
    pub(crate) csv: String,
}

impl Evaluator {
    fn new(warmup: Millis) -> Self {
        Self {
            warmup,
            snaps: BTreeMap::new(),
            tallies: BTreeMap::new(),
            windows: 0,
            violated: 0,
            csv: "time_ms,cell,slice,kind,violated\n".into(),
        }
    }

    /// Judges the window ending at `t`; `Some(any slice violated)` once past
    /// the warmup.
    fn observe(&mut self, sim: &Sim, policies: &BTreeMap<String, A1Policy>) -> Option<bool> {
        let t = sim.now();
        if !t.is_multiple_of(EVAL_WINDOW_MS) {
            return None;
        }
        let counted = t > self.warmup;
        let mut any = false;
        for cell in sim.cells() {
            let kinds: Vec<(SliceId, SliceKind)> =
                cell.slices.values().map(|s| (s.id, s.kind)).collect();
            let mut obj = SlicingObjectives::defaults(&kinds);
            for p in policies.values() {
                obj.apply(p);
            }
            for s in cell.slices.values() {
                let key = (cell.id, s.id);
                let base = self.snaps.insert(key, s.counters).unwrap_or_default();
                if !counted {
                    continue;
                }
                let sample = WindowSample {
                    delta: s.counters.since(&base),
                    buffer_bytes: sim.slice_buffer(cell.id, s.id),
                    connected_ues: sim.connected_ues(cell.id, s.id),
                    window_ms: EVAL_WINDOW_MS,
                };
                let offered = match s.kind {
                    SliceKind::Mmtc => sample.delta.arrived_packets as f64,
                    _ => sample.delta.arrived_bytes as f64,
                };
                let v = obj.slices[&s.id].violated(&sample, offered);
                any |= v;
                let tally = self.tallies.entry(key).or_insert_with(|| SliceTally {
                    cell: cell.id.0,
                    slice: s.id.0,
                    kind: Some(s.kind),
                    ..SliceTally::default()
                });
                tally.windows += 1;
                tally.violations += u64::from(v);
                self.csv.push_str(&format!(
                    "{t},{},{},{},{}\n",
                    cell.id,
                    s.id,
                    s.kind.as_str(),
                    u8::from(v)
                ));
            }
        }
        if !counted {
            return None;
        }
        self.windows += 1;
        self.violated += u64::from(any);
        Some(any)
    }
}

/// Quotas in force on one cell at the end of a tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaSample {
    pub t: Millis,
    pub cell: u32,
    pub quota: Vec<(u8, u32)>,
}

pub(crate) struct RanSide {
    pub(crate) sc: Scenario,
    pub(crate) sim: Sim,
    agents: Vec<E2Agent>,
    sync: Box<dyn Connection>,
    a1: Box<dyn Connection>,
    nodes: Vec<Box<dyn Connection>>,
    pending: Vec<Vec<Vec<u8>>>,
    pub(crate) store: PolicyStore,
    active: BTreeMap<String, A1Policy>,
    ei: EiRegistry,
    rapp: Option<ForecastRapp>,
    pub(crate) hb: HeartbeatMonitor,
    pub(crate) pm: PmCollector,
    pm_server: BTreeMap<(NodeId, u64), String>,
    pub(crate) capture: Option<Vec<u8>>,
    pub(crate) wire_to_ric: BTreeMap<String, u64>,
    pub(crate) wire_from_ric: BTreeMap<String, u64>,
    pub(crate) eval: Evaluator,
    pub(crate) window_log: Vec<(Millis, bool)>,
    pub(crate) trace: Option<Vec<QuotaSample>>,
    pub(crate) undecodable: u64,
}

impl RanSide {
    /// Builds the RAN side and opens its connections through `connect`,
    /// announcing each with its hello.
    pub(crate) fn open(
        sc: Scenario,
        model_path: Option<String>,
        capture: bool,
        trace: bool,
        connect: &mut dyn FnMut() -> Result<Box<dyn Connection>, HarnessError>,
    ) -> Result<Self, HarnessError> {
        let sim = Sim::new(&sc.sim, sc.seed).map_err(|e| HarnessError::ScenarioInvalid {
            origin: sc.name.clone(),
            line: None,
            field: Some("sim".into()),
            message: e.to_string(),
        })?;
        let agents: Vec<E2Agent> = sc
            .sim
            .nodes
            .iter()
            .map(|n| E2Agent::new(&sim, &NodeId::new(&n.id), &n.functions, n.pm_interval_ms))
            .collect();
        let mut sync = connect()?;
        send_json(
            sync.as_mut(),
            &Hello::Sync {
                scenario: Box::new(sc.clone()),
                model_path,
                nodes: agents.len(),
            },
        )?;
        let mut a1 = connect()?;
        send_json(a1.as_mut(), &Hello::A1)?;
        let mut nodes = Vec::new();
        for index in 0..agents.len() {
            let mut c = connect()?;
            send_json(c.as_mut(), &Hello::Node { index })?;
            nodes.push(c);
        }
        let mut hb = HeartbeatMonitor::default();
        for n in &sc.sim.nodes {
            hb.register(&NodeId::new(&n.id), n.heartbeat_period_ms, 0);
        }
        let mut ei = EiRegistry::default();
        ei.register(FORECAST_TOPIC);
        let rapp = sc.forecast.as_ref().map(|f| ForecastRapp::new(f.window, f.horizon_ms));
        let n = agents.len();
        Ok(Self {
            eval: Evaluator::new(sc.warmup_ms),
            sc,
            sim,
            agents,
            sync,
            a1,
            nodes,
            pending: vec![Vec::new(); n + 1],
            store: PolicyStore::default(),
            active: BTreeMap::new(),
            ei,
            rapp,
            hb,
            pm: PmCollector::default(),
            pm_server: BTreeMap::new(),
            capture: capture.then(Vec::new),
            wire_to_ric: BTreeMap::new(),
            wire_from_ric: BTreeMap::new(),
            window_log: Vec::new(),
            trace: trace.then(Vec::new),
            undecodable: 0,
        })
    }

    fn queue_e2(&mut self, node: usize, pdu: &E2apPdu) -> Result<(), HarnessError> {
        let bytes = e2ap::encode(pdu).map_err(|e| HarnessError::Protocol(e.to_string()))?;
        *self.wire_to_ric.entry(pdu.body.name().to_owned()).or_default() += 1;
        if let Some(cap) = &mut self.capture {
            append_record(
                cap,
                &CaptureRecord {
                    time_ms: self.sim.now(),
                    direction: Direction::ToRic,
                    node: self.agents[node].node().to_string(),
                    payload: bytes.clone(),
                },
            );
        }
        self.pending[node + 1].push(bytes);
        Ok(())
    }

    fn queue_a1(&mut self, req: &A1Request) {
        self.pending[0].push(serde_json::to_vec(req).expect("A1 requests serialize"));
    }

    /// Everything the RAN side does at instant `now` before the exchange.
    fn produce(&mut self, now: Millis, events: &[crate::sim::SimEvent]) -> Result<(), HarnessError> {
        for i in 0..self.agents.len() {
            let out = self.agents[i].after_step(&self.sim, events);
            for pdu in &out {
                self.queue_e2(i, pdu)?;
            }
        }
        for n in &self.sc.sim.nodes {
            let alive = n.heartbeat_stop_ms.is_none_or(|s| now < s);
            if alive && n.heartbeat_period_ms > 0 && now.is_multiple_of(n.heartbeat_period_ms) {
                self.hb.beat(&NodeId::new(&n.id), now);
            }
        }
        self.hb.poll(now);
        for i in 0..self.agents.len() {
            if let Some(f) = self.agents[i].pm_file(&self.sim) {
                let key = (f.node.clone(), f.interval);
                self.pm_server.insert(key, f.csv.clone());
                let note = FileReady {
                    node: f.node,
                    interval: f.interval,
                };
                let fresh = self
                    .pm
                    .on_file_ready(&note, &self.pm_server)
                    .map_err(|e| HarnessError::Protocol(e.to_string()))?;
                if fresh {
                    if let Some(r) = &mut self.rapp {
                        r.ingest_pm(&f.csv);
                    }
                }
            }
        }
        if let Some(m) = self.rapp.as_mut().and_then(|r| r.emit(now)) {
            if let Ok(req) = self.ei.publish(m) {
                self.queue_a1(&req);
            }
        }
        let due: Vec<A1Request> = self
            .sc
            .policies
            .iter()
            .filter(|p| p.at_ms == now)
            .map(|p| p.request.clone())
            .collect();
        for req in due {
            match self.store.apply(req.clone()) {
                Ok(Some(wire)) => {
                    match &req {
                        A1Request::Create(p) | A1Request::Update(p) => {
                            self.active.insert(p.policy_id.clone(), p.clone());
                        }
                        A1Request::Delete { policy_id } => {
                            self.active.remove(policy_id);
                        }
                        _ => {}
                    }
                    self.queue_a1(&wire);
                }
                Ok(None) => {}
                Err(_) => {}
            }
        }
        let due: Vec<(String, EventAction)> = self
            .sc
            .events
            .iter()
            .filter(|e| e.at_ms == now)
            .map(|e| (e.node.clone(), e.action.clone()))
            .collect();
        for (node, action) in due {
            let Some(i) = self.agents.iter().position(|a| a.node().as_str() == node) else {
                continue;
            };
            let EventAction::RemoveFunction { function_id } = action;
            let pdu = self.agents[i].remove_function(&mut self.sim, function_id);
            self.queue_e2(i, &pdu)?;
        }
        Ok(())
    }

    fn send_tick(&mut self, t: Millis) -> Result<(), HarnessError> {
        let counts: Vec<usize> = self.pending.iter().map(Vec::len).collect();
        for f in self.pending[0].drain(..) {
            self.a1.send(&f).map_err(|e| HarnessError::Transport(e.to_string()))?;
        }
        for (i, q) in self.pending[1..].iter_mut().enumerate() {
            for f in q.drain(..) {
                self.nodes[i]
                    .send(&f)
                    .map_err(|e| HarnessError::Transport(e.to_string()))?;
            }
        }
        send_json(self.sync.as_mut(), &SyncMsg::Tick { t, counts })
    }

    fn recv_tick(&mut self) -> Result<(), HarnessError> {
        let counts = match recv_json::<SyncReply>(self.sync.as_mut())? {
            SyncReply::Done { counts } => counts,
            SyncReply::Summary(_) => return Err(HarnessError::Protocol("summary before end".into())),
        };
        if counts.len() != self.nodes.len() + 1 {
            return Err(HarnessError::Protocol("reply count layout mismatch".into()));
        }
        for _ in 0..counts[0] {
            let f = recv_frame(self.a1.as_mut())?;
            let r: A1Reply =
                serde_json::from_slice(&f).map_err(|e| HarnessError::Protocol(e.to_string()))?;
            self.store.on_reply(r);
        }
        for (i, &n) in counts[1..].iter().enumerate() {
            for _ in 0..n {
                let f = recv_frame(self.nodes[i].as_mut())?;
                let pdu = match e2ap::decode(&f) {
                    Ok(p) => p,
                    Err(_) => {
                        self.undecodable += 1;
                        continue;
                    }
                };
                *self.wire_from_ric.entry(pdu.body.name().to_owned()).or_default() += 1;
                if let Some(cap) = &mut self.capture {
                    append_record(
                        cap,
                        &CaptureRecord {
                            time_ms: self.sim.now(),
                            direction: Direction::FromRic,
                            node: self.agents[i].node().to_string(),
                            payload: f,
                        },
                    );
                }
                let replies = self.agents[i].handle(&mut self.sim, pdu);
                for r in &replies {
                    self.queue_e2(i, r)?;
                }
            }
        }
        Ok(())
    }

    /// Runs the whole scenario. `between` lets a same-thread RIC process
    /// each tick after the RAN side has sent it.
    pub(crate) fn run(
        &mut self,
        between: &mut dyn FnMut() -> Result<(), HarnessError>,
    ) -> Result<RicSummary, HarnessError> {
        for i in 0..self.agents.len() {
            let req = self.agents[i].setup_request();
            self.queue_e2(i, &req)?;
        }
        self.produce(0, &[])?;
        self.exchange(0, between)?;
        for t in 1..=self.sc.duration_ms {
            self.sim.step();
            let events = self.sim.take_events();
            self.produce(t, &events)?;
            if let Some(v) = self.eval.observe(&self.sim, &self.active) {
                self.window_log.push((t, v));
            }
            if let Some(tr) = &mut self.trace {
                for c in self.sim.cells() {
                    tr.push(QuotaSample {
                        t,
                        cell: c.id.0,
                        quota: c.slices.values().map(|s| (s.id.0, s.dedicated_prb)).collect(),
                    });
                }
            }
            self.exchange(t, between)?;
        }
        send_json(self.sync.as_mut(), &SyncMsg::End)?;
        between()?;
        match recv_json::<SyncReply>(self.sync.as_mut())? {
            SyncReply::Summary(s) => Ok(*s),
            SyncReply::Done { .. } => Err(HarnessError::Protocol("expected the summary".into())),
        }
    }

    fn exchange(
        &mut self,
        t: Millis,
        between: &mut dyn FnMut() -> Result<(), HarnessError>,
    ) -> Result<(), HarnessError> {
        self.send_tick(t)?;
        between()?;
        self.recv_tick()
    }

    pub(crate) fn pm_files(&self) -> impl Iterator<Item = (&(NodeId, u64), &String)> {
        self.pm.files()
    }
}
