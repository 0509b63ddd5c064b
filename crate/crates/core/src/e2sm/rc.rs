//! E2SM-RC: slice resource control, connected-mode mobility (insert/control),
//! and node-local control/offset policies.

use super::{bad, SmError, KIND_TAG};
use crate::ids::{CellId, SliceId, UeId};
use crate::tlv::{TlvError, TlvReader, TlvWriter};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Parameters an `OffsetPolicy` may adjust, with the domain that owns them.
pub const TUNABLES: &[(&str, RcDomain)] = &[("a3_offset_db", RcDomain::ConnectedModeMobility)];

const MAX_POLICY_DEPTH: usize = 4;
const GENERIC_CONTROL_BASE: u8 = 0x10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RcDomain {
    RadioBearer,
    RadioResourceAllocation,
    ConnectedModeMobility,
    RadioAccess,
    DualConnectivity,
    CarrierAggregation,
    IdleMobility,
}

impl RcDomain {
    pub const ALL: [RcDomain; 7] = [
        RcDomain::RadioBearer,
        RcDomain::RadioResourceAllocation,
        RcDomain::ConnectedModeMobility,
        RcDomain::RadioAccess,
        RcDomain::DualConnectivity,
        RcDomain::CarrierAggregation,
        RcDomain::IdleMobility,
    ];

    pub fn code(self) -> u8 {
        RcDomain::ALL.iter().position(|d| *d == self).unwrap() as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        RcDomain::ALL.get(c as usize).copied()
    }

    pub fn is_supported(self) -> bool {
        matches!(
            self,
            RcDomain::RadioResourceAllocation | RcDomain::ConnectedModeMobility
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RcDomain::RadioBearer => "radio_bearer",
            RcDomain::RadioResourceAllocation => "radio_resource_allocation",
            RcDomain::ConnectedModeMobility => "connected_mode_mobility",
            RcDomain::RadioAccess => "radio_access",
            RcDomain::DualConnectivity => "dual_connectivity",
            RcDomain::CarrierAggregation => "carrier_aggregation",
            RcDomain::IdleMobility => "idle_mobility",
        }
    }
}

impl fmt::Display for RcDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RcDomain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RcDomain::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown RC domain `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    #[serde(rename = "lt")]
    Lt,
    #[serde(rename = "le")]
    Le,
    #[serde(rename = "gt")]
    Gt,
    #[serde(rename = "ge")]
    Ge,
    #[serde(rename = "eq")]
    Eq,
}

impl Comparator {
    const ALL: [Comparator; 5] = [
        Comparator::Lt,
        Comparator::Le,
        Comparator::Gt,
        Comparator::Ge,
        Comparator::Eq,
    ];

    pub fn eval(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }

    pub fn code(self) -> u8 {
        Comparator::ALL.iter().position(|c| *c == self).unwrap() as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Comparator::ALL.get(c as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Comparator::Lt => "lt",
            Comparator::Le => "le",
            Comparator::Gt => "gt",
            Comparator::Ge => "ge",
            Comparator::Eq => "eq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    RoundRobin,
    HighestBufferFirst,
}

impl SchedulerKind {
    pub fn code(self) -> u8 {
        match self {
            SchedulerKind::RoundRobin => 0,
            SchedulerKind::HighestBufferFirst => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(SchedulerKind::RoundRobin),
            1 => Some(SchedulerKind::HighestBufferFirst),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::RoundRobin => "round_robin",
            SchedulerKind::HighestBufferFirst => "highest_buffer_first",
        }
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "round_robin" | "rr" => Ok(SchedulerKind::RoundRobin),
            "highest_buffer_first" | "hbf" => Ok(SchedulerKind::HighestBufferFirst),
            other => Err(format!("unknown scheduler `{other}`")),
        }
    }
}

/// `metric <comparator> threshold`, evaluated by the node on its own counters.
#[derive(Debug, Clone, PartialEq)]
pub struct TriggerCondition {
    pub metric: String,
    pub comparator: Comparator,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RcControl {
    SlicePrbQuota {
        cell_id: CellId,
        slice_id: SliceId,
        dedicated_prb: u32,
        min_ratio: f64,
        max_ratio: f64,
    },
    HandoverCommand {
        ue_id: UeId,
        target_cell_global_id: u64,
    },
    /// Intra-slice scheduler selection.
    SliceScheduler {
        cell_id: CellId,
        slice_id: SliceId,
        scheduler: SchedulerKind,
    },
    ControlPolicy {
        condition: TriggerCondition,
        action: Box<RcControl>,
    },
    OffsetPolicy {
        parameter_name: String,
        delta: f64,
    },
}

impl RcControl {
    pub fn domain(&self) -> RcDomain {
        match self {
            RcControl::SlicePrbQuota { .. } | RcControl::SliceScheduler { .. } => {
                RcDomain::RadioResourceAllocation
            }
            RcControl::HandoverCommand { .. } => RcDomain::ConnectedModeMobility,
            RcControl::ControlPolicy { action, .. } => action.domain(),
            RcControl::OffsetPolicy { parameter_name, .. } => TUNABLES
                .iter()
                .find(|(n, _)| n == parameter_name)
                .map(|(_, d)| *d)
                .unwrap_or(RcDomain::RadioBearer),
        }
    }

    /// Parameter name used for conflict keys.
    pub fn parameter(&self) -> String {
        match self {
            RcControl::SlicePrbQuota { .. } => "dedicated_prb".into(),
            RcControl::HandoverCommand { .. } => "serving_cell".into(),
            RcControl::SliceScheduler { .. } => "scheduler".into(),
            RcControl::ControlPolicy { action, .. } => format!("policy:{}", action.parameter()),
            RcControl::OffsetPolicy { parameter_name, .. } => parameter_name.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), SmError> {
        self.validate_depth(0)
    }

    fn validate_depth(&self, depth: usize) -> Result<(), SmError> {
        match self {
            RcControl::SlicePrbQuota {
                min_ratio,
                max_ratio,
                ..
            } => {
                let unit = 0.0..=1.0;
                if !unit.contains(min_ratio) || !unit.contains(max_ratio) {
                    return Err(SmError::InvariantViolation(
                        "quota ratios must lie in [0, 1]".into(),
                    ));
                }
                if min_ratio > max_ratio {
                    return Err(SmError::InvariantViolation(
                        "min_ratio exceeds max_ratio".into(),
                    ));
                }
            }
            RcControl::OffsetPolicy {
                parameter_name,
                delta,
            } => {
                if !TUNABLES.iter().any(|(n, _)| n == parameter_name) {
                    return Err(SmError::InvariantViolation(format!(
                        "`{parameter_name}` is not a registered tunable"
                    )));
                }
                if !delta.is_finite() {
                    return Err(SmError::InvariantViolation("non-finite offset".into()));
                }
            }
            RcControl::ControlPolicy { action, .. } => {
                if depth + 1 >= MAX_POLICY_DEPTH {
                    return Err(SmError::InvariantViolation("policy nesting too deep".into()));
                }
                action.validate_depth(depth + 1)?;
            }
            RcControl::HandoverCommand { .. } | RcControl::SliceScheduler { .. } => {}
        }
        Ok(())
    }

    fn write(&self, w: &mut TlvWriter, tag: u8) -> Result<(), TlvError> {
        w.nested(tag, |w| match self {
            RcControl::SlicePrbQuota {
                cell_id,
                slice_id,
                dedicated_prb,
                min_ratio,
                max_ratio,
            } => {
                w.u8(1, 1)?;
                w.u32(2, cell_id.0)?;
                w.u8(3, slice_id.0)?;
                w.u32(4, *dedicated_prb)?;
                w.f64(5, *min_ratio)?;
                w.f64(6, *max_ratio)
            }
            RcControl::HandoverCommand {
                ue_id,
                target_cell_global_id,
            } => {
                w.u8(1, 2)?;
                w.u64(2, ue_id.0)?;
                w.u64(3, *target_cell_global_id)
            }
            RcControl::SliceScheduler {
                cell_id,
                slice_id,
                scheduler,
            } => {
                w.u8(1, 3)?;
                w.u32(2, cell_id.0)?;
                w.u8(3, slice_id.0)?;
                w.u8(4, scheduler.code())
            }
            RcControl::ControlPolicy { condition, action } => {
                w.u8(1, 4)?;
                w.str(2, &condition.metric)?;
                w.u8(3, condition.comparator.code())?;
                w.f64(4, condition.threshold)?;
                action.write(w, 5)
            }
            RcControl::OffsetPolicy {
                parameter_name,
                delta,
            } => {
                w.u8(1, 5)?;
                w.str(2, parameter_name)?;
                w.f64(3, *delta)
            }
        })
    }

    fn read(r: &mut TlvReader<'_>, tag: u8, depth: usize) -> Result<Self, SmError> {
        if depth >= MAX_POLICY_DEPTH {
            return Err(SmError::MalformedPayload("policy nesting too deep".into()));
        }
        let mut c = r.nested(tag)?;
        let control = match c.u8(1)? {
            1 => RcControl::SlicePrbQuota {
                cell_id: CellId(c.u32(2)?),
                slice_id: SliceId(c.u8(3)?),
                dedicated_prb: c.u32(4)?,
                min_ratio: c.f64(5)?,
                max_ratio: c.f64(6)?,
            },
            2 => RcControl::HandoverCommand {
                ue_id: UeId(c.u64(2)?),
                target_cell_global_id: c.u64(3)?,
            },
            3 => {
                let cell_id = CellId(c.u32(2)?);
                let slice_id = SliceId(c.u8(3)?);
                let code = c.u8(4)?;
                RcControl::SliceScheduler {
                    cell_id,
                    slice_id,
                    scheduler: SchedulerKind::from_code(code)
                        .ok_or_else(|| bad(4, format!("scheduler {code}")))?,
                }
            }
            4 => {
                let metric = c.string(2)?;
                let code = c.u8(3)?;
                let comparator =
                    Comparator::from_code(code).ok_or_else(|| bad(3, format!("comparator {code}")))?;
                let threshold = c.f64(4)?;
                let action = Box::new(RcControl::read(&mut c, 5, depth + 1)?);
                RcControl::ControlPolicy {
                    condition: TriggerCondition {
                        metric,
                        comparator,
                        threshold,
                    },
                    action,
                }
            }
            5 => RcControl::OffsetPolicy {
                parameter_name: c.string(2)?,
                delta: c.f64(3)?,
            },
            k if k >= GENERIC_CONTROL_BASE => {
                // Control styles of domains this model does not implement.
                return match RcDomain::from_code(k - GENERIC_CONTROL_BASE) {
                    Some(d) if !d.is_supported() => Err(SmError::UnsupportedDomain(d)),
                    _ => Err(SmError::MalformedPayload(format!("control kind {k}"))),
                };
            }
            k => return Err(SmError::MalformedPayload(format!("control kind {k}"))),
        };
        c.finish()?;
        Ok(control)
    }
}

/// A3 candidate reported through an insert indication; the UE's handover is
/// suspended until the RIC replies or the wait timer fires.
#[derive(Debug, Clone, PartialEq)]
pub struct HandoverInsert {
    pub ue_id: UeId,
    pub serving_cell_id: CellId,
    pub candidate_target_cell_id: CellId,
    pub serving_rsrp_dbm: f64,
    pub target_rsrp_dbm: f64,
    pub call_process_id: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlVerdict {
    Execute,
    /// Reply to an insert refusing the suspended procedure.
    Deny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RcControlHeader {
    pub verdict: ControlVerdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RcEventTrigger {
    /// Neighbour RSRP exceeds serving RSRP plus the cell's A3 offset.
    A3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcFunctionDefinition {
    pub domains: Vec<RcDomain>,
    pub tunables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcOutcome {
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RcPayload {
    FunctionDefinition(RcFunctionDefinition),
    EventTrigger(RcEventTrigger),
    /// Action definition of an insert/policy subscription: the domain asked for.
    ActionDefinition(RcDomain),
    Insert(HandoverInsert),
    ControlHeader(RcControlHeader),
    Control(RcControl),
    Outcome(RcOutcome),
}

impl RcPayload {
    fn kind(&self) -> u8 {
        match self {
            RcPayload::FunctionDefinition(_) => 1,
            RcPayload::EventTrigger(_) => 2,
            RcPayload::ActionDefinition(_) => 3,
            RcPayload::Insert(_) => 4,
            RcPayload::ControlHeader(_) => 5,
            RcPayload::Control(_) => 6,
            RcPayload::Outcome(_) => 7,
        }
    }

    pub fn validate(&self) -> Result<(), SmError> {
        match self {
            RcPayload::Control(c) => c.validate(),
            RcPayload::ActionDefinition(d) if !d.is_supported() => {
                Err(SmError::UnsupportedDomain(*d))
            }
            _ => Ok(()),
        }
    }
}

pub(super) fn write(w: &mut TlvWriter, p: &RcPayload) -> Result<(), TlvError> {
    w.u8(KIND_TAG, p.kind())?;
    match p {
        RcPayload::FunctionDefinition(d) => {
            for dom in &d.domains {
                w.u8(2, dom.code())?;
            }
            for t in &d.tunables {
                w.str(3, t)?;
            }
            Ok(())
        }
        RcPayload::EventTrigger(RcEventTrigger::A3) => w.u8(2, 0),
        RcPayload::ActionDefinition(d) => w.u8(2, d.code()),
        RcPayload::Insert(i) => {
            w.u64(2, i.ue_id.0)?;
            w.u32(3, i.serving_cell_id.0)?;
            w.u32(4, i.candidate_target_cell_id.0)?;
            w.f64(5, i.serving_rsrp_dbm)?;
            w.f64(6, i.target_rsrp_dbm)?;
            w.bytes(7, &i.call_process_id)
        }
        RcPayload::ControlHeader(h) => w.u8(
            2,
            match h.verdict {
                ControlVerdict::Execute => 0,
                ControlVerdict::Deny => 1,
            },
        ),
        RcPayload::Control(c) => c.write(w, 2),
        RcPayload::Outcome(o) => w.str(2, &o.summary),
    }
}

fn domain(r: &mut TlvReader<'_>, tag: u8) -> Result<RcDomain, TlvError> {
    let c = r.u8(tag)?;
    RcDomain::from_code(c).ok_or_else(|| bad(tag, format!("RC domain {c}")))
}

pub(super) fn read(r: &mut TlvReader<'_>) -> Result<RcPayload, SmError> {
    let kind = r.u8(KIND_TAG)?;
    let p = match kind {
        1 => {
            let mut domains = Vec::new();
            while r.peek_tag() == Some(2) {
                domains.push(domain(r, 2)?);
            }
            let mut tunables = Vec::new();
            while r.peek_tag() == Some(3) {
                tunables.push(r.string(3)?);
            }
            RcPayload::FunctionDefinition(RcFunctionDefinition { domains, tunables })
        }
        2 => match r.u8(2)? {
            0 => RcPayload::EventTrigger(RcEventTrigger::A3),
            t => return Err(SmError::MalformedPayload(format!("RC trigger {t}"))),
        },
        3 => RcPayload::ActionDefinition(domain(r, 2)?),
        4 => RcPayload::Insert(HandoverInsert {
            ue_id: UeId(r.u64(2)?),
            serving_cell_id: CellId(r.u32(3)?),
            candidate_target_cell_id: CellId(r.u32(4)?),
            serving_rsrp_dbm: r.f64(5)?,
            target_rsrp_dbm: r.f64(6)?,
            call_process_id: r.expect(7)?.to_vec(),
        }),
        5 => RcPayload::ControlHeader(RcControlHeader {
            verdict: match r.u8(2)? {
                0 => ControlVerdict::Execute,
                1 => ControlVerdict::Deny,
                v => return Err(SmError::MalformedPayload(format!("verdict {v}"))),
            },
        }),
        6 => RcPayload::Control(RcControl::read(r, 2, 0)?),
        7 => RcPayload::Outcome(RcOutcome {
            summary: r.string(2)?,
        }),
        k => return Err(SmError::MalformedPayload(format!("RC payload kind {k}"))),
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e2sm::{decode_rc, encode_rc, sm_decode};

    #[test]
    fn handover_insert_roundtrip() {
        let p = RcPayload::Insert(HandoverInsert {
            ue_id: UeId(7),
            serving_cell_id: CellId(0),
            candidate_target_cell_id: CellId(1),
            serving_rsrp_dbm: -91.5,
            target_rsrp_dbm: -88.0,
            call_process_id: vec![0, 0, 0, 7, 0, 0, 0, 1],
        });
        assert_eq!(decode_rc(&encode_rc(p.clone()).unwrap()).unwrap(), p);
    }

    #[test]
    fn nested_policy_roundtrip() {
        let p = RcPayload::Control(RcControl::ControlPolicy {
            condition: TriggerCondition {
                metric: "prb_requested".into(),
                comparator: Comparator::Gt,
                threshold: 16.0,
            },
            action: Box::new(RcControl::SliceScheduler {
                cell_id: CellId(0),
                slice_id: SliceId(1),
                scheduler: SchedulerKind::HighestBufferFirst,
            }),
        });
        assert_eq!(decode_rc(&encode_rc(p.clone()).unwrap()).unwrap(), p);
    }

    #[test]
    fn ratio_invariants() {
        let q = |lo, hi| {
            encode_rc(RcPayload::Control(RcControl::SlicePrbQuota {
                cell_id: CellId(0),
                slice_id: SliceId(0),
                dedicated_prb: 1,
                min_ratio: lo,
                max_ratio: hi,
            }))
        };
        assert!(q(0.6, 0.2).is_err());
        assert!(q(0.0, 1.5).is_err());
        assert!(q(0.2, 0.2).is_ok());
    }

    #[test]
    fn offset_policy_requires_registered_tunable() {
        let p = |name: &str| {
            encode_rc(RcPayload::Control(RcControl::OffsetPolicy {
                parameter_name: name.into(),
                delta: 2.0,
            }))
        };
        assert!(p("a3_offset_db").is_ok());
        assert!(matches!(p("tx_power"), Err(SmError::InvariantViolation(_))));
    }

    #[test]
    fn unsupported_domains_are_reported() {
        assert_eq!(
            encode_rc(RcPayload::ActionDefinition(RcDomain::DualConnectivity)),
            Err(SmError::UnsupportedDomain(RcDomain::DualConnectivity))
        );
        // Hand-built control of a carrier-aggregation style.
        let mut w = TlvWriter::new();
        w.nested(0, |w| {
            w.u8(KIND_TAG, 6)?;
            w.nested(2, |w| {
                w.u8(1, GENERIC_CONTROL_BASE + RcDomain::CarrierAggregation.code())
            })
        })
        .unwrap();
        let mut bytes = vec![0x02];
        bytes.extend(w.into_bytes());
        assert_eq!(
            sm_decode(&bytes),
            Err(SmError::UnsupportedDomain(RcDomain::CarrierAggregation))
        );
    }

    #[test]
    fn domains_of_controls() {
        let ho = RcControl::HandoverCommand {
            ue_id: UeId(1),
            target_cell_global_id: 9,
        };
        assert_eq!(ho.domain(), RcDomain::ConnectedModeMobility);
        let off = RcControl::OffsetPolicy {
            parameter_name: "a3_offset_db".into(),
            delta: 1.0,
        };
        assert_eq!(off.domain(), RcDomain::ConnectedModeMobility);
    }
}
