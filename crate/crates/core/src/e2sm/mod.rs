//! E2 service models carried inside the opaque E2AP fields.
//!
//! Every payload is `[model_id:1]` followed by one TLV container (tag `0x00`)
//! whose first field (tag `0x01`) is the payload kind. Model ids: KPM `0x01`,
//! RC `0x02`, NI `0x03`.

pub mod kpm;
pub mod rc;

pub use kpm::{
    metric_catalog, CellConfig, KpmActionDefinition, KpmEventTrigger, KpmFunctionDefinition,
    KpmIndication, KpmIndicationHeader, KpmPayload, KpmRecord, KpmScope, NodeKind,
};
pub use rc::{
    Comparator, ControlVerdict, HandoverInsert, RcControl, RcControlHeader, RcDomain,
    RcEventTrigger, RcFunctionDefinition, RcOutcome, RcPayload, SchedulerKind, TriggerCondition,
};

use crate::tlv::{TlvError, TlvReader, TlvWriter};
use thiserror::Error;

pub const KIND_TAG: u8 = 0x01;
const CONTAINER_TAG: u8 = 0x00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ServiceModelId {
    Kpm,
    Rc,
    Ni,
}

impl ServiceModelId {
    pub fn code(self) -> u8 {
        match self {
            ServiceModelId::Kpm => 0x01,
            ServiceModelId::Rc => 0x02,
            ServiceModelId::Ni => 0x03,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0x01 => Some(ServiceModelId::Kpm),
            0x02 => Some(ServiceModelId::Rc),
            0x03 => Some(ServiceModelId::Ni),
            _ => None,
        }
    }

    /// RAN function name advertised in E2 setup.
    pub fn function_name(self) -> &'static str {
        match self {
            ServiceModelId::Kpm => "ORAN-E2SM-KPM",
            ServiceModelId::Rc => "ORAN-E2SM-RC",
            ServiceModelId::Ni => "ORAN-E2SM-NI",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmError {
    #[error("unknown service model id 0x{0:02x}")]
    UnknownServiceModel(u8),
    #[error("malformed service-model payload: {0}")]
    MalformedPayload(String),
    #[error("service-model invariant violated: {0}")]
    InvariantViolation(String),
    #[error("RC domain `{0}` is not supported")]
    UnsupportedDomain(RcDomain),
}

impl From<TlvError> for SmError {
    fn from(e: TlvError) -> Self {
        SmError::MalformedPayload(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SmPayload {
    Kpm(KpmPayload),
    Rc(RcPayload),
    /// E2SM-NI: interface messages forwarded verbatim.
    Ni(Vec<u8>),
}

impl SmPayload {
    pub fn model_id(&self) -> ServiceModelId {
        match self {
            SmPayload::Kpm(_) => ServiceModelId::Kpm,
            SmPayload::Rc(_) => ServiceModelId::Rc,
            SmPayload::Ni(_) => ServiceModelId::Ni,
        }
    }
}

pub fn sm_encode(payload: &SmPayload) -> Result<Vec<u8>, SmError> {
    let mut w = TlvWriter::new();
    let inner = match payload {
        SmPayload::Kpm(p) => {
            p.validate()?;
            w.nested(CONTAINER_TAG, |w| kpm::write(w, p))
        }
        SmPayload::Rc(p) => {
            p.validate()?;
            w.nested(CONTAINER_TAG, |w| rc::write(w, p))
        }
        SmPayload::Ni(raw) => w.nested(CONTAINER_TAG, |w| {
            w.u8(KIND_TAG, 1)?;
            w.bytes(2, raw)
        }),
    };
    inner.map_err(|e| SmError::InvariantViolation(e.to_string()))?;
    let mut out = vec![payload.model_id().code()];
    out.extend_from_slice(&w.into_bytes());
    Ok(out)
}

pub fn sm_decode(data: &[u8]) -> Result<SmPayload, SmError> {
    let (&model, rest) = data
        .split_first()
        .ok_or_else(|| SmError::MalformedPayload("empty payload".into()))?;
    let model = ServiceModelId::from_code(model).ok_or(SmError::UnknownServiceModel(model))?;
    let mut outer = TlvReader::with_base(rest, 1);
    let mut r = outer.nested(CONTAINER_TAG)?;
    outer.finish()?;
    let payload = match model {
        ServiceModelId::Kpm => {
            let p = kpm::read(&mut r)?;
            p.validate()?;
            SmPayload::Kpm(p)
        }
        ServiceModelId::Rc => {
            let p = rc::read(&mut r)?;
            p.validate()?;
            SmPayload::Rc(p)
        }
        ServiceModelId::Ni => {
            let kind = r.u8(KIND_TAG)?;
            if kind != 1 {
                return Err(SmError::MalformedPayload(format!("NI payload kind {kind}")));
            }
            SmPayload::Ni(r.expect(2)?.to_vec())
        }
    };
    r.finish()?;
    Ok(payload)
}

/// Decodes a payload that must belong to the KPM model.
pub fn decode_kpm(data: &[u8]) -> Result<KpmPayload, SmError> {
    match sm_decode(data)? {
        SmPayload::Kpm(p) => Ok(p),
        other => Err(SmError::MalformedPayload(format!(
            "expected KPM payload, got {:?}",
            other.model_id()
        ))),
    }
}

/// Decodes a payload that must belong to the RC model.
pub fn decode_rc(data: &[u8]) -> Result<RcPayload, SmError> {
    match sm_decode(data)? {
        SmPayload::Rc(p) => Ok(p),
        other => Err(SmError::MalformedPayload(format!(
            "expected RC payload, got {:?}",
            other.model_id()
        ))),
    }
}

pub fn encode_kpm(p: KpmPayload) -> Result<Vec<u8>, SmError> {
    sm_encode(&SmPayload::Kpm(p))
}

pub fn encode_rc(p: RcPayload) -> Result<Vec<u8>, SmError> {
    sm_encode(&SmPayload::Rc(p))
}

pub(crate) fn bad(tag: u8, reason: impl Into<String>) -> TlvError {
    TlvError::BadValue {
        tag,
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{CellId, SliceId, UeId};

    #[test]
    fn kpm_trigger_is_two_fields() {
        let bytes = encode_kpm(KpmPayload::EventTrigger(KpmEventTrigger {
            report_period_ms: 100,
        }))
        .unwrap();
        assert_eq!(bytes[0], 0x01);
        let mut outer = TlvReader::new(&bytes[1..]);
        let mut inner = outer.nested(CONTAINER_TAG).unwrap();
        let mut n = 0;
        while !inner.is_empty() {
            inner.next_field().unwrap();
            n += 1;
        }
        assert_eq!(n, 2);
        assert_eq!(
            sm_decode(&bytes).unwrap(),
            SmPayload::Kpm(KpmPayload::EventTrigger(KpmEventTrigger {
                report_period_ms: 100
            }))
        );
    }

    #[test]
    fn ni_passthrough_is_identity() {
        let raw: Vec<u8> = (0..64u8).map(|i| i.wrapping_mul(37)).collect();
        let bytes = sm_encode(&SmPayload::Ni(raw.clone())).unwrap();
        assert_eq!(sm_decode(&bytes).unwrap(), SmPayload::Ni(raw));
    }

    #[test]
    fn unknown_model_byte() {
        assert_eq!(
            sm_decode(&[0xFF, 0, 0, 0, 0]),
            Err(SmError::UnknownServiceModel(0xFF))
        );
    }

    #[test]
    fn slice_quota_roundtrips() {
        let p = RcPayload::Control(RcControl::SlicePrbQuota {
            cell_id: CellId(0),
            slice_id: SliceId(0),
            dedicated_prb: 20,
            min_ratio: 0.2,
            max_ratio: 0.6,
        });
        let bytes = encode_rc(p.clone()).unwrap();
        assert_eq!(decode_rc(&bytes).unwrap(), p);
    }

    #[test]
    fn truncated_kpm_indication_is_malformed() {
        let ind = KpmPayload::IndicationMessage(vec![
            KpmRecord {
                metric: "tx_bytes".into(),
                scope: KpmScope::Slice(CellId(0), SliceId(1)),
                timestamp: 100,
                value: 12.5,
            },
            KpmRecord {
                metric: "prb_granted".into(),
                scope: KpmScope::Ue(UeId(9)),
                timestamp: 100,
                value: 3.0,
            },
        ]);
        let bytes = encode_kpm(ind).unwrap();
        for cut in 1..bytes.len() {
            assert!(
                matches!(sm_decode(&bytes[..cut]), Err(SmError::MalformedPayload(_))),
                "cut {cut}"
            );
        }
    }
}
