//! E2SM-KPM: periodic telemetry reports from DU / CU-UP / CU-CP containers.

use super::{bad, SmError, KIND_TAG};
use crate::ids::{CellId, Millis, SliceId, SliceKind, UeId};
use crate::tlv::{TlvError, TlvReader, TlvWriter};
use std::fmt;

const DU_METRICS: &[&str] = &[
    "tx_bytes",
    "tx_packets",
    "buffer_bytes",
    "latency_proxy_ms",
    "prb_granted",
    "prb_requested",
];
const CU_UP_METRICS: &[&str] = &["pdcp_tx_bytes", "pdcp_queue_bytes"];
const CU_CP_METRICS: &[&str] = &["connected_ues", "handover_count"];

/// Default accepted reporting band for event triggers.
pub const MIN_REPORT_PERIOD_MS: u32 = 10;
pub const MAX_REPORT_PERIOD_MS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    Du,
    CuUp,
    CuCp,
}

impl NodeKind {
    pub const ALL: [NodeKind; 3] = [NodeKind::Du, NodeKind::CuUp, NodeKind::CuCp];

    pub fn code(self) -> u8 {
        match self {
            NodeKind::Du => 0,
            NodeKind::CuUp => 1,
            NodeKind::CuCp => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        NodeKind::ALL.get(c as usize).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Du => "du",
            NodeKind::CuUp => "cu_up",
            NodeKind::CuCp => "cu_cp",
        }
    }

    /// Container that reports `metric`, if any.
    pub fn for_metric(metric: &str) -> Option<NodeKind> {
        NodeKind::ALL
            .into_iter()
            .find(|k| metric_catalog(*k).contains(&metric))
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Metric names reported by one measurement container, in stable order.
pub fn metric_catalog(kind: NodeKind) -> &'static [&'static str] {
    match kind {
        NodeKind::Du => DU_METRICS,
        NodeKind::CuUp => CU_UP_METRICS,
        NodeKind::CuCp => CU_CP_METRICS,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KpmScope {
    Node,
    Cell(CellId),
    Slice(CellId, SliceId),
    Ue(UeId),
}

impl KpmScope {
    pub fn cell(&self) -> Option<CellId> {
        match self {
            KpmScope::Cell(c) | KpmScope::Slice(c, _) => Some(*c),
            _ => None,
        }
    }

    pub fn slice(&self) -> Option<SliceId> {
        match self {
            KpmScope::Slice(_, s) => Some(*s),
            _ => None,
        }
    }

    /// Whether a record taken at `self` is covered by a subscription at `requested`.
    pub fn within(&self, requested: &KpmScope) -> bool {
        match requested {
            KpmScope::Node => true,
            KpmScope::Cell(c) => self.cell() == Some(*c),
            KpmScope::Slice(..) | KpmScope::Ue(_) => self == requested,
        }
    }

    fn write(&self, w: &mut TlvWriter, tag: u8) -> Result<(), TlvError> {
        w.nested(tag, |w| match self {
            KpmScope::Node => w.u8(1, 0),
            KpmScope::Cell(c) => {
                w.u8(1, 1)?;
                w.u32(2, c.0)
            }
            KpmScope::Slice(c, s) => {
                w.u8(1, 2)?;
                w.u32(2, c.0)?;
                w.u8(3, s.0)
            }
            KpmScope::Ue(u) => {
                w.u8(1, 3)?;
                w.u64(4, u.0)
            }
        })
    }

    fn read(r: &mut TlvReader<'_>, tag: u8) -> Result<Self, TlvError> {
        let mut s = r.nested(tag)?;
        let scope = match s.u8(1)? {
            0 => KpmScope::Node,
            1 => KpmScope::Cell(CellId(s.u32(2)?)),
            2 => KpmScope::Slice(CellId(s.u32(2)?), SliceId(s.u8(3)?)),
            3 => KpmScope::Ue(UeId(s.u64(4)?)),
            k => return Err(bad(1, format!("scope kind {k}"))),
        };
        s.finish()?;
        Ok(scope)
    }
}

impl fmt::Display for KpmScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KpmScope::Node => f.write_str("node"),
            KpmScope::Cell(c) => write!(f, "cell:{c}"),
            KpmScope::Slice(c, s) => write!(f, "slice:{c}/{s}"),
            KpmScope::Ue(u) => write!(f, "ue:{u}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellConfig {
    pub cell_id: CellId,
    pub global_id: u64,
    pub total_prb: u32,
    pub slices: Vec<(SliceId, SliceKind)>,
}

/// Advertised in the RAN function definition of a KPM function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpmFunctionDefinition {
    pub node_kinds: Vec<NodeKind>,
    pub cells: Vec<CellConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KpmEventTrigger {
    pub report_period_ms: u32,
}

impl KpmEventTrigger {
    pub fn validate_in(&self, min: u32, max: u32) -> Result<(), SmError> {
        if self.report_period_ms < min || self.report_period_ms > max {
            return Err(SmError::InvariantViolation(format!(
                "report period {} ms outside [{min}, {max}]",
                self.report_period_ms
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpmActionDefinition {
    pub node_kind: NodeKind,
    pub scope: KpmScope,
    pub metrics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KpmIndicationHeader {
    pub node_id: String,
    pub collection_start: Millis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpmRecord {
    pub metric: String,
    pub scope: KpmScope,
    pub timestamp: Millis,
    pub value: f64,
}

/// Decoded header and message of one KPM report indication.
#[derive(Debug, Clone, PartialEq)]
pub struct KpmIndication {
    pub header: KpmIndicationHeader,
    pub records: Vec<KpmRecord>,
}

impl KpmIndication {
    /// Checks the records against the action definition they answer.
    pub fn conforms_to(&self, def: &KpmActionDefinition) -> Result<(), SmError> {
        for r in &self.records {
            if !def.metrics.contains(&r.metric) {
                return Err(SmError::InvariantViolation(format!(
                    "metric `{}` was not requested",
                    r.metric
                )));
            }
            if !r.scope.within(&def.scope) {
                return Err(SmError::InvariantViolation(format!(
                    "record scope {} outside requested {}",
                    r.scope, def.scope
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KpmPayload {
    FunctionDefinition(KpmFunctionDefinition),
    EventTrigger(KpmEventTrigger),
    ActionDefinition(KpmActionDefinition),
    IndicationHeader(KpmIndicationHeader),
    IndicationMessage(Vec<KpmRecord>),
}

impl KpmPayload {
    fn kind(&self) -> u8 {
        match self {
            KpmPayload::FunctionDefinition(_) => 1,
            KpmPayload::EventTrigger(_) => 2,
            KpmPayload::ActionDefinition(_) => 3,
            KpmPayload::IndicationHeader(_) => 4,
            KpmPayload::IndicationMessage(_) => 5,
        }
    }

    pub fn validate(&self) -> Result<(), SmError> {
        match self {
            KpmPayload::EventTrigger(t) => {
                if t.report_period_ms == 0 {
                    return Err(SmError::InvariantViolation("report period is zero".into()));
                }
            }
            KpmPayload::ActionDefinition(a) => {
                if a.metrics.is_empty() {
                    return Err(SmError::InvariantViolation("empty metric list".into()));
                }
                let catalog = metric_catalog(a.node_kind);
                if let Some(m) = a.metrics.iter().find(|m| !catalog.contains(&m.as_str())) {
                    return Err(SmError::InvariantViolation(format!(
                        "metric `{m}` not in the {} catalog",
                        a.node_kind
                    )));
                }
            }
            KpmPayload::IndicationMessage(records) => {
                if records.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
                    return Err(SmError::InvariantViolation(
                        "record timestamps decrease".into(),
                    ));
                }
            }
            KpmPayload::FunctionDefinition(d) => {
                let mut ids: Vec<_> = d.cells.iter().map(|c| c.cell_id).collect();
                ids.sort();
                ids.dedup();
                if ids.len() != d.cells.len() {
                    return Err(SmError::InvariantViolation("duplicate cell id".into()));
                }
            }
            KpmPayload::IndicationHeader(_) => {}
        }
        Ok(())
    }
}

pub(super) fn write(w: &mut TlvWriter, p: &KpmPayload) -> Result<(), TlvError> {
    w.u8(KIND_TAG, p.kind())?;
    match p {
        KpmPayload::FunctionDefinition(d) => {
            for k in &d.node_kinds {
                w.u8(2, k.code())?;
            }
            for c in &d.cells {
                w.nested(3, |w| {
                    w.u32(1, c.cell_id.0)?;
                    w.u64(2, c.global_id)?;
                    w.u32(3, c.total_prb)?;
                    for (id, kind) in &c.slices {
                        w.nested(4, |w| {
                            w.u8(1, id.0)?;
                            w.u8(2, kind.code())
                        })?;
                    }
                    Ok(())
                })?;
            }
            Ok(())
        }
        KpmPayload::EventTrigger(t) => w.u32(2, t.report_period_ms),
        KpmPayload::ActionDefinition(a) => {
            w.u8(2, a.node_kind.code())?;
            a.scope.write(w, 3)?;
            for m in &a.metrics {
                w.str(4, m)?;
            }
            Ok(())
        }
        KpmPayload::IndicationHeader(h) => {
            w.str(2, &h.node_id)?;
            w.u64(3, h.collection_start)
        }
        KpmPayload::IndicationMessage(records) => {
            for r in records {
                w.nested(2, |w| {
                    w.str(1, &r.metric)?;
                    r.scope.write(w, 2)?;
                    w.u64(3, r.timestamp)?;
                    w.f64(4, r.value)
                })?;
            }
            Ok(())
        }
    }
}

fn node_kind(r: &mut TlvReader<'_>, tag: u8) -> Result<NodeKind, TlvError> {
    let c = r.u8(tag)?;
    NodeKind::from_code(c).ok_or_else(|| bad(tag, format!("node kind {c}")))
}

pub(super) fn read(r: &mut TlvReader<'_>) -> Result<KpmPayload, SmError> {
    let kind = r.u8(KIND_TAG)?;
    let p = match kind {
        1 => {
            let mut node_kinds = Vec::new();
            while r.peek_tag() == Some(2) {
                node_kinds.push(node_kind(r, 2)?);
            }
            let mut cells = Vec::new();
            for mut c in r.repeated(3)? {
                let cell_id = CellId(c.u32(1)?);
                let global_id = c.u64(2)?;
                let total_prb = c.u32(3)?;
                let mut slices = Vec::new();
                for mut s in c.repeated(4)? {
                    let id = SliceId(s.u8(1)?);
                    let code = s.u8(2)?;
                    let kind =
                        SliceKind::from_code(code).ok_or_else(|| bad(2, "slice kind"))?;
                    s.finish()?;
                    slices.push((id, kind));
                }
                c.finish()?;
                cells.push(CellConfig {
                    cell_id,
                    global_id,
                    total_prb,
                    slices,
                });
            }
            KpmPayload::FunctionDefinition(KpmFunctionDefinition { node_kinds, cells })
        }
        2 => KpmPayload::EventTrigger(KpmEventTrigger {
            report_period_ms: r.u32(2)?,
        }),
        3 => {
            let node_kind = node_kind(r, 2)?;
            let scope = KpmScope::read(r, 3)?;
            let mut metrics = Vec::new();
            while r.peek_tag() == Some(4) {
                metrics.push(r.string(4)?);
            }
            KpmPayload::ActionDefinition(KpmActionDefinition {
                node_kind,
                scope,
                metrics,
            })
        }
        4 => KpmPayload::IndicationHeader(KpmIndicationHeader {
            node_id: r.string(2)?,
            collection_start: r.u64(3)?,
        }),
        5 => {
            let mut records = Vec::new();
            for mut rec in r.repeated(2)? {
                let metric = rec.string(1)?;
                let scope = KpmScope::read(&mut rec, 2)?;
                let timestamp = rec.u64(3)?;
                let value = rec.f64(4)?;
                rec.finish()?;
                records.push(KpmRecord {
                    metric,
                    scope,
                    timestamp,
                    value,
                });
            }
            KpmPayload::IndicationMessage(records)
        }
        k => return Err(SmError::MalformedPayload(format!("KPM payload kind {k}"))),
    };
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::e2sm::{decode_kpm, encode_kpm};

    #[test]
    fn catalogs_are_disjoint() {
        for a in NodeKind::ALL {
            for b in NodeKind::ALL {
                if a != b {
                    for m in metric_catalog(a) {
                        assert!(!metric_catalog(b).contains(m));
                    }
                }
            }
        }
        assert!(metric_catalog(NodeKind::Du).contains(&"prb_requested"));
        assert_eq!(
            metric_catalog(NodeKind::CuCp),
            &["connected_ues", "handover_count"]
        );
    }

    #[test]
    fn action_definition_rejects_foreign_metric() {
        let a = KpmPayload::ActionDefinition(KpmActionDefinition {
            node_kind: NodeKind::CuUp,
            scope: KpmScope::Node,
            metrics: vec!["tx_bytes".into()],
        });
        assert!(matches!(encode_kpm(a), Err(SmError::InvariantViolation(_))));
    }

    #[test]
    fn function_definition_roundtrip() {
        let d = KpmPayload::FunctionDefinition(KpmFunctionDefinition {
            node_kinds: vec![NodeKind::Du, NodeKind::CuCp],
            cells: vec![CellConfig {
                cell_id: CellId(3),
                global_id: 0xDEAD_BEEF,
                total_prb: 50,
                slices: vec![(SliceId(0), SliceKind::Urllc), (SliceId(1), SliceKind::Embb)],
            }],
        });
        assert_eq!(decode_kpm(&encode_kpm(d.clone()).unwrap()).unwrap(), d);
    }

    #[test]
    fn trigger_band() {
        let t = KpmEventTrigger {
            report_period_ms: 5,
        };
        assert!(t.validate_in(MIN_REPORT_PERIOD_MS, MAX_REPORT_PERIOD_MS).is_err());
        assert!(t.validate_in(1, 1000).is_ok());
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let rec = |t| KpmRecord {
            metric: "tx_bytes".into(),
            scope: KpmScope::Node,
            timestamp: t,
            value: 0.0,
        };
        let p = KpmPayload::IndicationMessage(vec![rec(5), rec(4)]);
        assert!(encode_kpm(p).is_err());
    }
}
