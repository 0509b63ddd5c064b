use crate::e2sm::{RcDomain, SchedulerKind};
use crate::ids::SliceKind;
use serde::{Deserialize, Serialize};

fn default_bytes_per_prb() -> u64 {
    1000
}
fn default_p0() -> f64 {
    -40.0
}
fn default_exponent() -> f64 {
    3.0
}
fn default_a3() -> f64 {
    3.0
}
fn default_functions() -> Vec<String> {
    vec!["kpm".into(), "rc".into()]
}
fn default_domains() -> Vec<RcDomain> {
    vec![
        RcDomain::RadioResourceAllocation,
        RcDomain::ConnectedModeMobility,
    ]
}
fn default_heartbeat() -> u64 {
    100
}
fn default_pm_interval() -> u64 {
    1000
}

/// What a node does when an insert wait timer fires without a RIC reply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeoutAction {
    #[default]
    Execute,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "default_bytes_per_prb")]
    pub bytes_per_prb: u64,
    #[serde(default = "default_p0")]
    pub p0_dbm: f64,
    #[serde(default = "default_exponent")]
    pub pathloss_exponent: f64,
    #[serde(default)]
    pub insert_timeout: TimeoutAction,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub ues: Vec<UeSpec>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            bytes_per_prb: default_bytes_per_prb(),
            p0_dbm: default_p0(),
            pathloss_exponent: default_exponent(),
            insert_timeout: TimeoutAction::Execute,
            nodes: Vec::new(),
            cells: Vec::new(),
            ues: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    /// Service models exposed as RAN functions: any of `kpm`, `rc`, `ni`.
    #[serde(default = "default_functions")]
    pub functions: Vec<String>,
    #[serde(default = "default_domains")]
    pub rc_domains: Vec<RcDomain>,
    #[serde(default = "default_heartbeat")]
    pub heartbeat_period_ms: u64,
    /// Node stops emitting heartbeats from this instant (fault injection).
    #[serde(default)]
    pub heartbeat_stop_ms: Option<u64>,
    #[serde(default = "default_pm_interval")]
    pub pm_interval_ms: u64,
}

impl NodeSpec {
    pub fn new(id: &str) -> Self {
        Self {
            id: id.into(),
            functions: default_functions(),
            rc_domains: default_domains(),
            heartbeat_period_ms: default_heartbeat(),
            heartbeat_stop_ms: None,
            pm_interval_ms: default_pm_interval(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub id: u32,
    pub node: String,
    #[serde(default)]
    pub global_id: Option<u64>,
    pub total_prb: u32,
    #[serde(default)]
    pub position: [f64; 2],
    #[serde(default = "default_a3")]
    pub a3_offset_db: f64,
    #[serde(default)]
    pub slices: Vec<SliceSpec>,
}

impl CellSpec {
    pub fn global_id(&self) -> u64 {
        self.global_id.unwrap_or(0x0001_0000 + u64::from(self.id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSpec {
    pub id: u8,
    pub kind: SliceKind,
    #[serde(default)]
    pub dedicated_prb: u32,
    #[serde(default = "default_scheduler")]
    pub scheduler: SchedulerKind,
}

fn default_scheduler() -> SchedulerKind {
    SchedulerKind::RoundRobin
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeSpec {
    pub id: u64,
    pub cell: u32,
    pub slice: u8,
    #[serde(default)]
    pub traffic: TrafficSpec,
    /// Fixed position; defaults to the serving cell's site.
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    /// Piecewise-linear waypoints; overrides `position` when non-empty.
    #[serde(default)]
    pub path: Vec<Waypoint>,
    #[serde(default)]
    pub active_from_ms: u64,
    #[serde(default)]
    pub active_until_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t_ms: u64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficSpec {
    #[default]
    None,
    /// One packet of `bytes_per_tick` every tick.
    Constant { bytes_per_tick: u64 },
    /// One packet of `burst_bytes` every `period_ms`.
    Periodic { burst_bytes: u64, period_ms: u64 },
    /// Poisson packet count per tick, fixed packet size.
    Poisson {
        mean_packets_per_tick: f64,
        packet_bytes: u64,
    },
}

impl TrafficSpec {
    /// Long-run offered load in bytes per tick.
    pub fn mean_bytes_per_tick(&self) -> f64 {
        match self {
            TrafficSpec::None => 0.0,
            TrafficSpec::Constant { bytes_per_tick } => *bytes_per_tick as f64,
            TrafficSpec::Periodic {
                burst_bytes,
                period_ms,
            } => *burst_bytes as f64 / (*period_ms).max(1) as f64,
            TrafficSpec::Poisson {
                mean_packets_per_tick,
                packet_bytes,
            } => mean_packets_per_tick * *packet_bytes as f64,
        }
    }
}
