//! Deterministic discrete-time RAN: cells hosting slices, UEs with traffic
//! and waypoint mobility, a per-TTI PRB scheduler, A3 handover triggers and
//! application of RC controls.
//!
//! One call to [`Sim::step`] advances the clock by one TTI and then processes
//! that tick in a fixed order: insert timeouts, pending handovers, mobility,
//! arrivals, node-local policy rules, scheduling, A3 evaluation.

pub mod agent;
pub mod config;

pub use agent::{E2Agent, PmFile};
pub use config::*;

use crate::e2sm::{
    ControlVerdict, HandoverInsert, RcControl, RcDomain, SchedulerKind, TriggerCondition,
};
use crate::ids::{CellId, Millis, NodeId, SliceId, SliceKind, UeId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write;
use thiserror::Error;

/// Clamp applied to the latency proxy when nothing was served.
pub const LATENCY_CLAMP_MS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("quota infeasible on cell {cell}: {requested} PRBs requested, {capacity} available")]
    InfeasibleQuota {
        cell: CellId,
        requested: u32,
        capacity: u32,
    },
    #[error("unknown target: {0}")]
    UnknownTarget(String),
    #[error("RC domain `{0}` not supported by this node")]
    UnsupportedDomain(RcDomain),
}

/// Cumulative counters; report windows are differences of two snapshots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub arrived_bytes: u64,
    pub arrived_packets: u64,
    pub tx_bytes: u64,
    pub tx_packets: u64,
    pub prb_granted: u64,
    pub prb_requested: u64,
    pub ticks: u64,
    pub handovers_out: u64,
    pub ho_in_bytes: u64,
    pub ho_out_bytes: u64,
}

impl Counters {
    pub fn since(&self, earlier: &Counters) -> Counters {
        Counters {
            arrived_bytes: self.arrived_bytes - earlier.arrived_bytes,
            arrived_packets: self.arrived_packets - earlier.arrived_packets,
            tx_bytes: self.tx_bytes - earlier.tx_bytes,
            tx_packets: self.tx_packets - earlier.tx_packets,
            prb_granted: self.prb_granted - earlier.prb_granted,
            prb_requested: self.prb_requested - earlier.prb_requested,
            ticks: self.ticks - earlier.ticks,
            handovers_out: self.handovers_out - earlier.handovers_out,
            ho_in_bytes: self.ho_in_bytes - earlier.ho_in_bytes,
            ho_out_bytes: self.ho_out_bytes - earlier.ho_out_bytes,
        }
    }

    pub fn add(&mut self, o: &Counters) {
        self.arrived_bytes += o.arrived_bytes;
        self.arrived_packets += o.arrived_packets;
        self.tx_bytes += o.tx_bytes;
        self.tx_packets += o.tx_packets;
        self.prb_granted += o.prb_granted;
        self.prb_requested += o.prb_requested;
        self.ticks += o.ticks;
        self.handovers_out += o.handovers_out;
        self.ho_in_bytes += o.ho_in_bytes;
        self.ho_out_bytes += o.ho_out_bytes;
    }
}

/// Counters over one window plus the gauges observed at its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSample {
    pub delta: Counters,
    pub buffer_bytes: u64,
    pub connected_ues: u64,
    pub window_ms: u64,
}

impl WindowSample {
    /// Value of a catalog metric over this window.
    pub fn metric(&self, name: &str) -> Option<f64> {
        let d = &self.delta;
        let per_tick = |v: u64| {
            if d.ticks == 0 {
                0.0
            } else {
                v as f64 / d.ticks as f64
            }
        };
        Some(match name {
            "tx_bytes" | "pdcp_tx_bytes" => d.tx_bytes as f64,
            "tx_packets" => d.tx_packets as f64,
            "buffer_bytes" | "pdcp_queue_bytes" => self.buffer_bytes as f64,
            "latency_proxy_ms" => latency_proxy(self.buffer_bytes, d.tx_bytes, self.window_ms),
            "prb_granted" => per_tick(d.prb_granted),
            "prb_requested" => per_tick(d.prb_requested),
            "connected_ues" => self.connected_ues as f64,
            "handover_count" => d.handovers_out as f64,
            _ => return None,
        })
    }
}

/// Buffer divided by the served rate over the window, in milliseconds.
pub fn latency_proxy(buffer_bytes: u64, served_bytes: u64, window_ms: u64) -> f64 {
    if buffer_bytes == 0 {
        0.0
    } else if served_bytes == 0 || window_ms == 0 {
        LATENCY_CLAMP_MS
    } else {
        let rate = served_bytes as f64 / window_ms as f64;
        (buffer_bytes as f64 / rate).min(LATENCY_CLAMP_MS)
    }
}

/// Log-distance path loss without fading.
pub fn rsrp_dbm(p0_dbm: f64, exponent: f64, distance_m: f64) -> f64 {
    p0_dbm - 10.0 * exponent * distance_m.max(1.0).log10()
}

#[derive(Debug, Clone)]
pub struct SliceState {
    pub id: SliceId,
    pub kind: SliceKind,
    pub dedicated_prb: u32,
    pub scheduler: SchedulerKind,
    pub counters: Counters,
    rr_cursor: Option<UeId>,
}

#[derive(Debug, Clone)]
pub struct CellState {
    pub id: CellId,
    pub node: NodeId,
    pub global_id: u64,
    pub total_prb: u32,
    pub position: [f64; 2],
    pub a3_offset_db: f64,
    pub slices: BTreeMap<SliceId, SliceState>,
}

impl CellState {
    pub fn dedicated_sum(&self) -> u32 {
        self.slices.values().map(|s| s.dedicated_prb).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frozen {
    pub call_process_id: Vec<u8>,
    pub target: CellId,
    pub deadline: Millis,
}

#[derive(Debug, Clone)]
pub struct UeState {
    pub id: UeId,
    pub cell: CellId,
    pub slice: SliceId,
    pub position: [f64; 2],
    pub buffer_bytes: u64,
    pub counters: Counters,
    pub frozen: Option<Frozen>,
    pub pending_handover: Option<CellId>,
    path: Vec<Waypoint>,
    traffic: TrafficSpec,
    active_from: Millis,
    active_until: Option<Millis>,
    rng: ChaCha8Rng,
    queue: VecDeque<u64>,
    a3_latch: Option<CellId>,
}

impl UeState {
    fn active_at(&self, t: Millis) -> bool {
        t >= self.active_from && self.active_until.is_none_or(|u| t < u)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct PolicyRule {
    condition: TriggerCondition,
    action: RcControl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimEvent {
    /// Insert emitted towards the RIC; the UE stays frozen until reply or deadline.
    Insert { node: NodeId, insert: HandoverInsert },
    /// A3 predicate held with no insert subscription; handover proceeds autonomously.
    AutonomousHandover { ue: UeId, from: CellId, to: CellId },
    InsertTimeout { node: NodeId, ue: UeId, executed: bool },
    HandoverExecuted { ue: UeId, from: CellId, to: CellId },
}

#[derive(Debug, Clone)]
struct NodeState {
    domains: Vec<RcDomain>,
    insert_wait: Option<Millis>,
    rules: BTreeMap<String, PolicyRule>,
}

pub struct Sim {
    bytes_per_prb: u64,
    p0_dbm: f64,
    exponent: f64,
    timeout_action: TimeoutAction,
    now: Millis,
    nodes: BTreeMap<NodeId, NodeState>,
    cells: BTreeMap<CellId, CellState>,
    ues: BTreeMap<UeId, UeState>,
    events: Vec<SimEvent>,
    insert_seq: u32,
}

impl Sim {
    pub fn new(cfg: &SimConfig, seed: u64) -> Result<Sim, SimError> {
        let invalid = |m: String| Err(SimError::InvalidConfig(m));
        if cfg.bytes_per_prb == 0 {
            return invalid("bytes_per_prb must be positive".into());
        }
        let mut nodes = BTreeMap::new();
        for n in &cfg.nodes {
            let state = NodeState {
                domains: n.rc_domains.clone(),
                insert_wait: None,
                rules: BTreeMap::new(),
            };
            if nodes.insert(NodeId::new(&n.id), state).is_some() {
                return invalid(format!("duplicate node `{}`", n.id));
            }
        }
        let mut cells = BTreeMap::new();
        for c in &cfg.cells {
            let node = NodeId::new(&c.node);
            if !nodes.contains_key(&node) {
                return invalid(format!("cell {} references unknown node `{}`", c.id, c.node));
            }
            if c.total_prb == 0 {
                return invalid(format!("cell {} has no PRBs", c.id));
            }
            let mut slices = BTreeMap::new();
            for s in &c.slices {
                let st = SliceState {
                    id: SliceId(s.id),
                    kind: s.kind,
                    dedicated_prb: s.dedicated_prb,
                    scheduler: s.scheduler,
                    counters: Counters::default(),
                    rr_cursor: None,
                };
                if slices.insert(SliceId(s.id), st).is_some() {
                    return invalid(format!("cell {} repeats slice {}", c.id, s.id));
                }
            }
            let cell = CellState {
                id: CellId(c.id),
                node,
                global_id: c.global_id(),
                total_prb: c.total_prb,
                position: c.position,
                a3_offset_db: c.a3_offset_db,
                slices,
            };
            if cell.dedicated_sum() > cell.total_prb {
                return invalid(format!(
                    "cell {} dedicates {} of {} PRBs",
                    c.id,
                    cell.dedicated_sum(),
                    c.total_prb
                ));
            }
            if cells.insert(CellId(c.id), cell).is_some() {
                return invalid(format!("duplicate cell {}", c.id));
            }
        }
        let mut globals = BTreeSet::new();
        for c in cells.values() {
            if !globals.insert(c.global_id) {
                return invalid(format!("duplicate global cell id {}", c.global_id));
            }
        }
        let mut ues = BTreeMap::new();
        for u in &cfg.ues {
            let Some(cell) = cells.get(&CellId(u.cell)) else {
                return invalid(format!("UE {} references unknown cell {}", u.id, u.cell));
            };
            if !cell.slices.contains_key(&SliceId(u.slice)) {
                return invalid(format!(
                    "UE {} uses slice {} absent from cell {}",
                    u.id, u.slice, u.cell
                ));
            }
            if u.path.windows(2).any(|w| w[1].t_ms <= w[0].t_ms) {
                return invalid(format!("UE {} waypoints must be strictly increasing", u.id));
            }
            if let TrafficSpec::Poisson {
                mean_packets_per_tick,
                ..
            } = u.traffic
            {
                if !(mean_packets_per_tick > 0.0 && mean_packets_per_tick.is_finite()) {
                    return invalid(format!("UE {} Poisson mean must be positive", u.id));
                }
            }
            if let TrafficSpec::Periodic { period_ms: 0, .. } = u.traffic {
                return invalid(format!("UE {} periodic traffic needs a period", u.id));
            }
            let position = u.position.unwrap_or(cell.position);
            let ue = UeState {
                id: UeId(u.id),
                cell: CellId(u.cell),
                slice: SliceId(u.slice),
                position,
                buffer_bytes: 0,
                counters: Counters::default(),
                frozen: None,
                pending_handover: None,
                path: u.path.clone(),
                traffic: u.traffic.clone(),
                active_from: u.active_from_ms,
                active_until: u.active_until_ms,
                rng: ChaCha8Rng::seed_from_u64(mix(seed, u.id)),
                queue: VecDeque::new(),
                a3_latch: None,
            };
            if ues.insert(UeId(u.id), ue).is_some() {
                return invalid(format!("duplicate UE {}", u.id));
            }
        }
        let mut sim = Sim {
            bytes_per_prb: cfg.bytes_per_prb,
            p0_dbm: cfg.p0_dbm,
            exponent: cfg.pathloss_exponent,
            timeout_action: cfg.insert_timeout,
            now: 0,
            nodes,
            cells,
            ues,
            events: Vec::new(),
            insert_seq: 0,
        };
        sim.update_positions();
        Ok(sim)
    }

    pub fn now(&self) -> Millis {
        self.now
    }

    pub fn bytes_per_prb(&self) -> u64 {
        self.bytes_per_prb
    }

    pub fn cells(&self) -> impl Iterator<Item = &CellState> {
        self.cells.values()
    }

    pub fn cell(&self, id: CellId) -> Option<&CellState> {
        self.cells.get(&id)
    }

    pub fn ues(&self) -> impl Iterator<Item = &UeState> {
        self.ues.values()
    }

    pub fn ue(&self, id: UeId) -> Option<&UeState> {
        self.ues.get(&id)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &NodeId> {
        self.nodes.keys()
    }

    pub fn cells_of<'a>(&'a self, node: &'a NodeId) -> impl Iterator<Item = &'a CellState> + 'a {
        self.cells.values().filter(move |c| &c.node == node)
    }

    pub fn node_domains(&self, node: &NodeId) -> Option<&[RcDomain]> {
        self.nodes.get(node).map(|n| n.domains.as_slice())
    }

    pub fn take_events(&mut self) -> Vec<SimEvent> {
        std::mem::take(&mut self.events)
    }

    /// Enables (with the given wait) or disables insert-mode A3 handling on a node.
    pub fn set_insert_wait(&mut self, node: &NodeId, wait: Option<Millis>) {
        if let Some(n) = self.nodes.get_mut(node) {
            n.insert_wait = wait;
        }
    }

    pub fn insert_wait(&self, node: &NodeId) -> Option<Millis> {
        self.nodes.get(node).and_then(|n| n.insert_wait)
    }

    pub fn a3_offset(&self, cell: CellId) -> Option<f64> {
        self.cells.get(&cell).map(|c| c.a3_offset_db)
    }

    pub fn rsrp(&self, cell: CellId, ue: UeId) -> Option<f64> {
        let c = self.cells.get(&cell)?;
        let u = self.ues.get(&ue)?;
        Some(rsrp_dbm(self.p0_dbm, self.exponent, distance(c.position, u.position)))
    }

    pub fn slice_buffer(&self, cell: CellId, slice: SliceId) -> u64 {
        self.ues
            .values()
            .filter(|u| u.cell == cell && u.slice == slice)
            .map(|u| u.buffer_bytes)
            .sum()
    }

    pub fn connected_ues(&self, cell: CellId, slice: SliceId) -> u64 {
        self.ues
            .values()
            .filter(|u| u.cell == cell && u.slice == slice)
            .count() as u64
    }

    pub fn step_n(&mut self, n: u64) {
        for _ in 0..n {
            self.step();
        }
    }

    pub fn step(&mut self) {
        self.now += 1;
        let now = self.now;
        self.fire_insert_timeouts(now);
        self.execute_handovers();
        self.update_positions();
        self.arrivals(now);
        self.evaluate_rules();
        let cell_ids: Vec<CellId> = self.cells.keys().copied().collect();
        for c in cell_ids {
            self.schedule_cell(c);
        }
        self.evaluate_a3(now);
    }

    fn fire_insert_timeouts(&mut self, now: Millis) {
        let timeout_action = self.timeout_action;
        let mut fired = Vec::new();
        for u in self.ues.values_mut() {
            if let Some(f) = &u.frozen {
                if f.deadline <= now {
                    let target = f.target;
                    u.frozen = None;
                    let executed = timeout_action == TimeoutAction::Execute;
                    if executed {
                        u.pending_handover = Some(target);
                    }
                    fired.push((u.id, u.cell, executed));
                }
            }
        }
        for (ue, cell, executed) in fired {
            let node = self.cells[&cell].node.clone();
            self.events
                .push(SimEvent::InsertTimeout { node, ue, executed });
        }
    }

    fn execute_handovers(&mut self) {
        let moves: Vec<(UeId, CellId)> = self
            .ues
            .values_mut()
            .filter_map(|u| u.pending_handover.take().map(|t| (u.id, t)))
            .collect();
        for (id, target) in moves {
            let (from, slice, buffer) = {
                let u = &self.ues[&id];
                (u.cell, u.slice, u.buffer_bytes)
            };
            if from == target {
                continue;
            }
            if let Some(s) = self
                .cells
                .get_mut(&from)
                .and_then(|c| c.slices.get_mut(&slice))
            {
                s.counters.handovers_out += 1;
                s.counters.ho_out_bytes += buffer;
            }
            if let Some(s) = self
                .cells
                .get_mut(&target)
                .and_then(|c| c.slices.get_mut(&slice))
            {
                s.counters.ho_in_bytes += buffer;
            }
            let u = self.ues.get_mut(&id).unwrap();
            u.cell = target;
            u.counters.handovers_out += 1;
            u.a3_latch = None;
            self.events.push(SimEvent::HandoverExecuted {
                ue: id,
                from,
                to: target,
            });
        }
    }

    fn update_positions(&mut self) {
        let now = self.now;
        for u in self.ues.values_mut() {
            if let Some(p) = position_on_path(&u.path, now) {
                u.position = p;
            }
        }
    }

    fn arrivals(&mut self, now: Millis) {
        for u in self.ues.values_mut() {
            if !u.active_at(now) {
                continue;
            }
            let (packets, size) = match u.traffic {
                TrafficSpec::None => (0, 0),
                TrafficSpec::Constant { bytes_per_tick } => (u64::from(bytes_per_tick > 0), bytes_per_tick),
                TrafficSpec::Periodic {
                    burst_bytes,
                    period_ms,
                } => (
                    u64::from((now - 1).is_multiple_of(period_ms) && burst_bytes > 0),
                    burst_bytes,
                ),
                TrafficSpec::Poisson {
                    mean_packets_per_tick,
                    packet_bytes,
                } => {
                    let d = Poisson::new(mean_packets_per_tick).expect("validated mean");
                    (d.sample(&mut u.rng) as u64, packet_bytes)
                }
            };
            if packets == 0 || size == 0 {
                continue;
            }
            for _ in 0..packets {
                u.queue.push_back(size);
            }
            let bytes = packets * size;
            u.buffer_bytes += bytes;
            u.counters.arrived_bytes += bytes;
            u.counters.arrived_packets += packets;
            if let Some(s) = self
                .cells
                .get_mut(&u.cell)
                .and_then(|c| c.slices.get_mut(&u.slice))
            {
                s.counters.arrived_bytes += bytes;
                s.counters.arrived_packets += packets;
            }
        }
    }

    fn prbs_needed(&self, bytes: u64) -> u64 {
        bytes.div_ceil(self.bytes_per_prb)
    }

    fn current_metric(&self, cell: CellId, slice: SliceId, metric: &str) -> Option<f64> {
        let members = self
            .ues
            .values()
            .filter(|u| u.cell == cell && u.slice == slice);
        Some(match metric {
            "prb_requested" => members.map(|u| self.prbs_needed(u.buffer_bytes)).sum::<u64>() as f64,
            "buffer_bytes" | "pdcp_queue_bytes" => members.map(|u| u.buffer_bytes).sum::<u64>() as f64,
            "connected_ues" => members.count() as f64,
            _ => return None,
        })
    }

    fn evaluate_rules(&mut self) {
        let mut to_apply = Vec::new();
        for (node, n) in &self.nodes {
            for rule in n.rules.values() {
                let Some((cell, slice)) = control_target(&rule.action) else {
                    continue;
                };
                let Some(v) = self.current_metric(cell, slice, &rule.condition.metric) else {
                    continue;
                };
                if rule.condition.comparator.eval(v, rule.condition.threshold) {
                    to_apply.push((node.clone(), rule.action.clone()));
                }
            }
        }
        for (node, action) in to_apply {
            let _ = self.apply_direct(&node, &action);
        }
    }

    fn schedule_cell(&mut self, cell_id: CellId) {
        let bpp = self.bytes_per_prb;
        let slice_ids: Vec<SliceId> = self.cells[&cell_id].slices.keys().copied().collect();
        for sid in slice_ids {
            let (prbs, scheduler, cursor) = {
                let s = &self.cells[&cell_id].slices[&sid];
                (u64::from(s.dedicated_prb), s.scheduler, s.rr_cursor)
            };
            let members: Vec<UeId> = self
                .ues
                .values()
                .filter(|u| u.cell == cell_id && u.slice == sid)
                .map(|u| u.id)
                .collect();
            let need: Vec<u64> = members
                .iter()
                .map(|id| self.ues[id].buffer_bytes.div_ceil(bpp))
                .collect();
            let requested: u64 = need.iter().sum();
            let alloc = match scheduler {
                SchedulerKind::RoundRobin => round_robin(&members, &need, prbs, cursor),
                SchedulerKind::HighestBufferFirst => {
                    let buffers: Vec<u64> =
                        members.iter().map(|id| self.ues[id].buffer_bytes).collect();
                    highest_buffer_first(&buffers, prbs, bpp)
                }
            };
            let mut granted = 0;
            let mut served_bytes = 0;
            let mut served_packets = 0;
            let mut last_served = None;
            for (i, id) in members.iter().enumerate() {
                if alloc[i] == 0 {
                    continue;
                }
                granted += alloc[i];
                last_served = Some(*id);
                let u = self.ues.get_mut(id).unwrap();
                let (b, p) = drain(&mut u.queue, alloc[i] * bpp);
                u.buffer_bytes -= b;
                u.counters.tx_bytes += b;
                u.counters.tx_packets += p;
                u.counters.prb_granted += alloc[i];
                served_bytes += b;
                served_packets += p;
            }
            for (i, id) in members.iter().enumerate() {
                let u = self.ues.get_mut(id).unwrap();
                u.counters.prb_requested += need[i];
                u.counters.ticks += 1;
            }
            let s = self
                .cells
                .get_mut(&cell_id)
                .unwrap()
                .slices
                .get_mut(&sid)
                .unwrap();
            if last_served.is_some() {
                s.rr_cursor = last_served;
            }
            s.counters.tx_bytes += served_bytes;
            s.counters.tx_packets += served_packets;
            s.counters.prb_granted += granted;
            s.counters.prb_requested += requested;
            s.counters.ticks += 1;
        }
    }

    fn evaluate_a3(&mut self, now: Millis) {
        let ids: Vec<UeId> = self.ues.keys().copied().collect();
        for id in ids {
            let (serving, slice, frozen, pending, latch) = {
                let u = &self.ues[&id];
                (u.cell, u.slice, u.frozen.is_some(), u.pending_handover.is_some(), u.a3_latch)
            };
            if frozen || pending {
                continue;
            }
            let rs = self.rsrp(serving, id).unwrap();
            let offset = self.cells[&serving].a3_offset_db;
            let mut best: Option<(CellId, f64)> = None;
            for c in self.cells.values() {
                if c.id == serving || !c.slices.contains_key(&slice) {
                    continue;
                }
                let r = self.rsrp(c.id, id).unwrap();
                if best.is_none_or(|(_, b)| r > b) {
                    best = Some((c.id, r));
                }
            }
            let Some((target, rt)) = best.filter(|(_, rt)| *rt >= rs + offset) else {
                self.ues.get_mut(&id).unwrap().a3_latch = None;
                continue;
            };
            if latch == Some(target) {
                continue;
            }
            let node = self.cells[&serving].node.clone();
            let wait = self.nodes[&node].insert_wait;
            let u = self.ues.get_mut(&id).unwrap();
            u.a3_latch = Some(target);
            match wait {
                Some(w) => {
                    self.insert_seq += 1;
                    let mut cp = id.0.to_be_bytes().to_vec();
                    cp.extend_from_slice(&self.insert_seq.to_be_bytes());
                    u.frozen = Some(Frozen {
                        call_process_id: cp.clone(),
                        target,
                        deadline: now + w,
                    });
                    self.events.push(SimEvent::Insert {
                        node,
                        insert: HandoverInsert {
                            ue_id: id,
                            serving_cell_id: serving,
                            candidate_target_cell_id: target,
                            serving_rsrp_dbm: rs,
                            target_rsrp_dbm: rt,
                            call_process_id: cp,
                        },
                    });
                }
                None => {
                    u.pending_handover = Some(target);
                    self.events.push(SimEvent::AutonomousHandover {
                        ue: id,
                        from: serving,
                        to: target,
                    });
                }
            }
        }
    }

    /// Applies an RC control addressed to `node`. Returns a one-line outcome.
    pub fn apply_control(&mut self, node: &NodeId, control: &RcControl) -> Result<String, SimError> {
        let n = self
            .nodes
            .get(node)
            .ok_or_else(|| SimError::UnknownTarget(format!("node {node}")))?;
        let domain = control.domain();
        if !domain.is_supported() || !n.domains.contains(&domain) {
            return Err(SimError::UnsupportedDomain(domain));
        }
        match control {
            RcControl::ControlPolicy { condition, action } => {
                if let Some((cell, slice)) = control_target(action) {
                    self.check_slice(node, cell, slice)?;
                } else {
                    return Err(SimError::UnknownTarget(
                        "policy action has no cell/slice target".into(),
                    ));
                }
                let key = format!(
                    "{}|{}|{}",
                    action_key(action),
                    condition.metric,
                    condition.comparator.as_str()
                );
                let rule = PolicyRule {
                    condition: condition.clone(),
                    action: (**action).clone(),
                };
                self.nodes
                    .get_mut(node)
                    .unwrap()
                    .rules
                    .insert(key.clone(), rule);
                Ok(format!("policy installed: {key}"))
            }
            _ => self.apply_direct(node, control),
        }
    }

    fn check_slice(&self, node: &NodeId, cell: CellId, slice: SliceId) -> Result<(), SimError> {
        let c = self
            .cells
            .get(&cell)
            .filter(|c| &c.node == node)
            .ok_or_else(|| SimError::UnknownTarget(format!("cell {cell} on {node}")))?;
        if !c.slices.contains_key(&slice) {
            return Err(SimError::UnknownTarget(format!("slice {slice} on cell {cell}")));
        }
        Ok(())
    }

    fn apply_direct(&mut self, node: &NodeId, control: &RcControl) -> Result<String, SimError> {
        match control {
            RcControl::SlicePrbQuota {
                cell_id,
                slice_id,
                dedicated_prb,
                ..
            } => {
                self.check_slice(node, *cell_id, *slice_id)?;
                let c = self.cells.get_mut(cell_id).unwrap();
                let others: u32 = c
                    .slices
                    .values()
                    .filter(|s| s.id != *slice_id)
                    .map(|s| s.dedicated_prb)
                    .sum();
                if others + dedicated_prb > c.total_prb {
                    return Err(SimError::InfeasibleQuota {
                        cell: *cell_id,
                        requested: others + dedicated_prb,
                        capacity: c.total_prb,
                    });
                }
                c.slices.get_mut(slice_id).unwrap().dedicated_prb = *dedicated_prb;
                Ok(format!(
                    "cell {cell_id} slice {slice_id} dedicated_prb={dedicated_prb}"
                ))
            }
            RcControl::SliceScheduler {
                cell_id,
                slice_id,
                scheduler,
            } => {
                self.check_slice(node, *cell_id, *slice_id)?;
                let s = self
                    .cells
                    .get_mut(cell_id)
                    .unwrap()
                    .slices
                    .get_mut(slice_id)
                    .unwrap();
                s.scheduler = *scheduler;
                Ok(format!(
                    "cell {cell_id} slice {slice_id} scheduler={}",
                    scheduler.as_str()
                ))
            }
            RcControl::HandoverCommand {
                ue_id,
                target_cell_global_id,
            } => {
                let target = self.handover_target(*ue_id, *target_cell_global_id)?;
                let u = self.ues.get_mut(ue_id).unwrap();
                u.frozen = None;
                u.pending_handover = Some(target);
                Ok(format!("ue {ue_id} handover to cell {target}"))
            }
            RcControl::OffsetPolicy {
                parameter_name,
                delta,
            } => {
                let mut touched = 0;
                for c in self.cells.values_mut().filter(|c| &c.node == node) {
                    match parameter_name.as_str() {
                        "a3_offset_db" => c.a3_offset_db += delta,
                        other => return Err(SimError::UnknownTarget(format!("tunable {other}"))),
                    }
                    touched += 1;
                }
                Ok(format!("{parameter_name} += {delta} on {touched} cells"))
            }
            RcControl::ControlPolicy { .. } => self.apply_control(node, control),
        }
    }

    fn handover_target(&self, ue: UeId, global_id: u64) -> Result<CellId, SimError> {
        let u = self
            .ues
            .get(&ue)
            .ok_or_else(|| SimError::UnknownTarget(format!("ue {ue}")))?;
        let c = self
            .cells
            .values()
            .find(|c| c.global_id == global_id)
            .ok_or_else(|| SimError::UnknownTarget(format!("global cell id {global_id}")))?;
        if !c.slices.contains_key(&u.slice) {
            return Err(SimError::UnknownTarget(format!(
                "cell {} does not host slice {}",
                c.id, u.slice
            )));
        }
        Ok(c.id)
    }

    /// Resolves a suspended insert. `Execute` carries the control to run
    /// (normally a `HandoverCommand`); `Deny` releases the UE in place.
    pub fn reply_insert(
        &mut self,
        node: &NodeId,
        call_process_id: &[u8],
        verdict: ControlVerdict,
        control: Option<&RcControl>,
    ) -> Result<String, SimError> {
        let ue = self
            .ues
            .values()
            .find(|u| {
                u.frozen
                    .as_ref()
                    .is_some_and(|f| f.call_process_id == call_process_id)
            })
            .map(|u| u.id)
            .ok_or_else(|| SimError::UnknownTarget("no suspended procedure for call process".into()))?;
        match verdict {
            ControlVerdict::Deny => {
                self.ues.get_mut(&ue).unwrap().frozen = None;
                Ok(format!("ue {ue} handover denied"))
            }
            ControlVerdict::Execute => match control {
                Some(c) => self.apply_control(node, c),
                None => {
                    let u = self.ues.get_mut(&ue).unwrap();
                    let target = u.frozen.take().unwrap().target;
                    u.pending_handover = Some(target);
                    Ok(format!("ue {ue} handover to cell {target}"))
                }
            },
        }
    }

    /// SHA-256 over a canonical dump of the full simulation state.
    pub fn state_hash(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "now {}", self.now);
        for (id, n) in &self.nodes {
            let _ = writeln!(s, "node {id} wait {:?}", n.insert_wait);
            for (k, r) in &n.rules {
                let _ = writeln!(s, " rule {k} {:016x}", r.condition.threshold.to_bits());
            }
        }
        for c in self.cells.values() {
            let _ = writeln!(
                s,
                "cell {} a3 {:016x}",
                c.id,
                c.a3_offset_db.to_bits()
            );
            for sl in c.slices.values() {
                let _ = writeln!(
                    s,
                    " slice {} {} {} {:?} {:?}",
                    sl.id,
                    sl.dedicated_prb,
                    sl.scheduler.as_str(),
                    sl.rr_cursor,
                    sl.counters
                );
            }
        }
        for u in self.ues.values() {
            let _ = writeln!(
                s,
                "ue {} cell {} slice {} pos {:016x},{:016x} buf {} q {:?} {:?} frozen {:?} pend {:?} latch {:?} rng {}",
                u.id,
                u.cell,
                u.slice,
                u.position[0].to_bits(),
                u.position[1].to_bits(),
                u.buffer_bytes,
                u.queue,
                u.counters,
                u.frozen,
                u.pending_handover,
                u.a3_latch,
                u.rng.get_word_pos()
            );
        }
        let digest = Sha256::digest(s.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn mix(seed: u64, ue: u64) -> u64 {
    // splitmix64 finaliser over the pair
    let mut z = seed ^ ue.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Linear interpolation along waypoints; clamps outside the path.
pub fn position_on_path(path: &[Waypoint], t: Millis) -> Option<[f64; 2]> {
    let first = path.first()?;
    if t <= first.t_ms {
        return Some([first.x, first.y]);
    }
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        if t <= b.t_ms {
            let f = (t - a.t_ms) as f64 / (b.t_ms - a.t_ms) as f64;
            return Some([a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)]);
        }
    }
    let last = path.last().unwrap();
    Some([last.x, last.y])
}

fn control_target(c: &RcControl) -> Option<(CellId, SliceId)> {
    match c {
        RcControl::SlicePrbQuota {
            cell_id, slice_id, ..
        }
        | RcControl::SliceScheduler {
            cell_id, slice_id, ..
        } => Some((*cell_id, *slice_id)),
        _ => None,
    }
}

fn action_key(c: &RcControl) -> String {
    match control_target(c) {
        Some((cell, slice)) => format!("{cell}/{slice}/{}", c.parameter()),
        None => c.parameter(),
    }
}

/// Hands out PRBs one at a time, starting after `cursor`, skipping UEs with
/// nothing left to send.
fn round_robin(members: &[UeId], need: &[u64], prbs: u64, cursor: Option<UeId>) -> Vec<u64> {
    let n = members.len();
    let mut alloc = vec![0u64; n];
    if n == 0 {
        return alloc;
    }
    let start = match cursor {
        Some(c) => members.iter().position(|m| *m > c).unwrap_or(0),
        None => 0,
    };
    let mut left = prbs;
    let mut i = start;
    let mut idle = 0;
    while left > 0 && idle < n {
        if alloc[i] < need[i] {
            alloc[i] += 1;
            left -= 1;
            idle = 0;
        } else {
            idle += 1;
        }
        i = (i + 1) % n;
    }
    alloc
}

/// Each PRB goes to the UE with the largest remaining buffer (lowest index on ties).
fn highest_buffer_first(buffers: &[u64], prbs: u64, bpp: u64) -> Vec<u64> {
    let mut remaining = buffers.to_vec();
    let mut alloc = vec![0u64; buffers.len()];
    for _ in 0..prbs {
        let Some((i, _)) = remaining
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > 0)
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        else {
            break;
        };
        alloc[i] += 1;
        remaining[i] = remaining[i].saturating_sub(bpp);
    }
    alloc
}

/// Serves up to `budget` bytes from the head of the queue; returns
/// (bytes served, packets completed).
fn drain(queue: &mut VecDeque<u64>, budget: u64) -> (u64, u64) {
    let mut left = budget;
    let mut bytes = 0;
    let mut packets = 0;
    while left > 0 {
        let Some(front) = queue.front_mut() else {
            break;
        };
        if *front <= left {
            left -= *front;
            bytes += *front;
            packets += 1;
            queue.pop_front();
        } else {
            *front -= left;
            bytes += left;
            left = 0;
        }
    }
    (bytes, packets)
}
