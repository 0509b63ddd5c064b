//! E2 application protocol: message types, a canonical binary encoding and a
//! line-oriented debug rendering whose field names follow the E2AP IE names
//! (`ricRequestorID`, `RANfunctionID`, ...).
//!
//! ## Wire layout
//!
//! | Offset | Size | Field |
//! |--------|------|-------|
//! | 0 | 1 | version (`0x01`) |
//! | 1 | 1 | pdu class (0 initiating, 1 successful, 2 unsuccessful) |
//! | 2 | 2 | procedure code, big-endian |
//! | 4 | .. | one `protocolIEs` TLV (tag `0x00`) holding the message fields |
//!
//! Field tags reuse the E2AP protocol IE ids where one exists (29 request id,
//! 5 RAN function id, 15 action id, ...). Wrapping the fields in a single
//! container makes every strict prefix of a valid encoding undecodable.

mod codec;
mod render;

pub use codec::{decode, encode};
pub use render::render_debug;

use crate::tlv::MAX_VALUE_LEN;
use thiserror::Error;

pub const WIRE_VERSION: u8 = 0x01;

/// Procedure codes. Subscription (8) and indication (5) match E2AP; the rest
/// are fixed by this codec.
pub mod procedure {
    pub const SETUP: u16 = 1;
    pub const SERVICE_UPDATE: u16 = 2;
    pub const ERROR_INDICATION: u16 = 3;
    pub const CONTROL: u16 = 4;
    pub const INDICATION: u16 = 5;
    pub const SUBSCRIPTION: u16 = 8;
    pub const SUBSCRIPTION_DELETE: u16 = 9;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unknown procedure code {0}")]
    UnknownProcedureCode(u16),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RicRequestId {
    pub requestor_id: u32,
    pub instance_id: u32,
}

impl RicRequestId {
    pub fn new(requestor_id: u32, instance_id: u32) -> Self {
        Self {
            requestor_id,
            instance_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RanFunction {
    pub function_id: u16,
    pub name: String,
    pub revision: u16,
    /// Service-model function descriptor (opaque to E2AP).
    pub definition: Vec<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionType {
    Report,
    Insert,
    Policy,
}

impl ActionType {
    pub fn code(self) -> u8 {
        match self {
            ActionType::Report => 0,
            ActionType::Insert => 1,
            ActionType::Policy => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        [ActionType::Report, ActionType::Insert, ActionType::Policy]
            .get(c as usize)
            .copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionType::Report => "report",
            ActionType::Insert => "insert",
            ActionType::Policy => "policy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubsequentActionType {
    Continue,
    Wait,
}

impl SubsequentActionType {
    pub fn name(self) -> &'static str {
        match self {
            SubsequentActionType::Continue => "continue",
            SubsequentActionType::Wait => "wait",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TimeToWait {
    W1ms,
    W2ms,
    W5ms,
    W10ms,
    W20ms,
    W50ms,
    W100ms,
    W200ms,
    W500ms,
    W1s,
    W2s,
    W5s,
    W10s,
}

impl TimeToWait {
    pub const ALL: [TimeToWait; 13] = [
        TimeToWait::W1ms,
        TimeToWait::W2ms,
        TimeToWait::W5ms,
        TimeToWait::W10ms,
        TimeToWait::W20ms,
        TimeToWait::W50ms,
        TimeToWait::W100ms,
        TimeToWait::W200ms,
        TimeToWait::W500ms,
        TimeToWait::W1s,
        TimeToWait::W2s,
        TimeToWait::W5s,
        TimeToWait::W10s,
    ];

    pub fn millis(self) -> u64 {
        match self {
            TimeToWait::W1ms => 1,
            TimeToWait::W2ms => 2,
            TimeToWait::W5ms => 5,
            TimeToWait::W10ms => 10,
            TimeToWait::W20ms => 20,
            TimeToWait::W50ms => 50,
            TimeToWait::W100ms => 100,
            TimeToWait::W200ms => 200,
            TimeToWait::W500ms => 500,
            TimeToWait::W1s => 1_000,
            TimeToWait::W2s => 2_000,
            TimeToWait::W5s => 5_000,
            TimeToWait::W10s => 10_000,
        }
    }

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|t| *t == self).unwrap_or(0) as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeToWait::W1ms => "w1ms",
            TimeToWait::W2ms => "w2ms",
            TimeToWait::W5ms => "w5ms",
            TimeToWait::W10ms => "w10ms",
            TimeToWait::W20ms => "w20ms",
            TimeToWait::W50ms => "w50ms",
            TimeToWait::W100ms => "w100ms",
            TimeToWait::W200ms => "w200ms",
            TimeToWait::W500ms => "w500ms",
            TimeToWait::W1s => "w1s",
            TimeToWait::W2s => "w2s",
            TimeToWait::W5s => "w5s",
            TimeToWait::W10s => "w10s",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|t| t.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsequentAction {
    pub kind: SubsequentActionType,
    pub time_to_wait: TimeToWait,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RicAction {
    pub action_id: u8,
    pub action_type: ActionType,
    pub definition: Vec<u8>,
    pub subsequent: Option<SubsequentAction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PduClass {
    Initiating,
    SuccessfulOutcome,
    UnsuccessfulOutcome,
}

impl PduClass {
    pub fn code(self) -> u8 {
        match self {
            PduClass::Initiating => 0,
            PduClass::SuccessfulOutcome => 1,
            PduClass::UnsuccessfulOutcome => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(PduClass::Initiating),
            1 => Some(PduClass::SuccessfulOutcome),
            2 => Some(PduClass::UnsuccessfulOutcome),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PduClass::Initiating => "initiatingMessage",
            PduClass::SuccessfulOutcome => "successfulOutcome",
            PduClass::UnsuccessfulOutcome => "unsuccessfulOutcome",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CauseKind {
    Unsupported,
    Rejected,
    Timeout,
    Conflict,
}

impl CauseKind {
    pub const ALL: [CauseKind; 4] = [
        CauseKind::Unsupported,
        CauseKind::Rejected,
        CauseKind::Timeout,
        CauseKind::Conflict,
    ];

    pub fn code(self) -> u8 {
        match self {
            CauseKind::Unsupported => 0,
            CauseKind::Rejected => 1,
            CauseKind::Timeout => 2,
            CauseKind::Conflict => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Self::ALL.get(c as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CauseKind::Unsupported => "unsupported",
            CauseKind::Rejected => "rejected",
            CauseKind::Timeout => "timeout",
            CauseKind::Conflict => "conflict",
        }
    }
}

/// Failure cause: a coarse kind plus free text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cause {
    pub kind: CauseKind,
    pub detail: String,
}

impl Cause {
    pub fn new(kind: CauseKind, detail: impl Into<String>) -> Self {
        Self {
            kind,
            detail: detail.into(),
        }
    }
}

impl std::fmt::Display for Cause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndicationType {
    Report,
    Insert,
}

impl IndicationType {
    pub fn name(self) -> &'static str {
        match self {
            IndicationType::Report => "report",
            IndicationType::Insert => "insert",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum E2apMessage {
    SetupRequest {
        node_id: String,
        functions: Vec<RanFunction>,
    },
    SetupResponse {
        accepted_ids: Vec<u16>,
        rejected_ids: Vec<u16>,
    },
    SubscriptionRequest {
        request_id: RicRequestId,
        function_id: u16,
        event_trigger: Vec<u8>,
        actions: Vec<RicAction>,
    },
    SubscriptionResponse {
        request_id: RicRequestId,
        admitted_action_ids: Vec<u8>,
        rejected_action_ids: Vec<u8>,
    },
    SubscriptionFailure {
        request_id: RicRequestId,
        cause: Cause,
    },
    SubscriptionDeleteRequest {
        request_id: RicRequestId,
        function_id: u16,
    },
    SubscriptionDeleteResponse {
        request_id: RicRequestId,
    },
    Indication {
        request_id: RicRequestId,
        function_id: u16,
        action_id: u8,
        sequence_number: Option<u32>,
        indication_type: IndicationType,
        header: Vec<u8>,
        message: Vec<u8>,
        call_process_id: Option<Vec<u8>>,
    },
    ControlRequest {
        request_id: RicRequestId,
        function_id: u16,
        call_process_id: Option<Vec<u8>>,
        header: Vec<u8>,
        message: Vec<u8>,
        ack_requested: bool,
    },
    ControlAcknowledge {
        request_id: RicRequestId,
        outcome: Vec<u8>,
    },
    ControlFailure {
        request_id: RicRequestId,
        cause: Cause,
    },
    ServiceUpdate {
        added: Vec<RanFunction>,
        modified: Vec<RanFunction>,
        deleted: Vec<u16>,
    },
    ServiceUpdateAcknowledge {
        accepted_ids: Vec<u16>,
    },
    ErrorIndication {
        cause: Cause,
    },
}

impl E2apMessage {
    /// The (class, procedure code) pair fixed for this message kind.
    pub fn class_and_code(&self) -> (PduClass, u16) {
        use E2apMessage::*;
        use PduClass::*;
        match self {
            SetupRequest { .. } => (Initiating, procedure::SETUP),
            SetupResponse { .. } => (SuccessfulOutcome, procedure::SETUP),
            SubscriptionRequest { .. } => (Initiating, procedure::SUBSCRIPTION),
            SubscriptionResponse { .. } => (SuccessfulOutcome, procedure::SUBSCRIPTION),
            SubscriptionFailure { .. } => (UnsuccessfulOutcome, procedure::SUBSCRIPTION),
            SubscriptionDeleteRequest { .. } => (Initiating, procedure::SUBSCRIPTION_DELETE),
            SubscriptionDeleteResponse { .. } => {
                (SuccessfulOutcome, procedure::SUBSCRIPTION_DELETE)
            }
            Indication { .. } => (Initiating, procedure::INDICATION),
            ControlRequest { .. } => (Initiating, procedure::CONTROL),
            ControlAcknowledge { .. } => (SuccessfulOutcome, procedure::CONTROL),
            ControlFailure { .. } => (UnsuccessfulOutcome, procedure::CONTROL),
            ServiceUpdate { .. } => (Initiating, procedure::SERVICE_UPDATE),
            ServiceUpdateAcknowledge { .. } => (SuccessfulOutcome, procedure::SERVICE_UPDATE),
            ErrorIndication { .. } => (Initiating, procedure::ERROR_INDICATION),
        }
    }

    pub fn name(&self) -> &'static str {
        use E2apMessage::*;
        match self {
            SetupRequest { .. } => "E2setupRequest",
            SetupResponse { .. } => "E2setupResponse",
            SubscriptionRequest { .. } => "RICsubscriptionRequest",
            SubscriptionResponse { .. } => "RICsubscriptionResponse",
            SubscriptionFailure { .. } => "RICsubscriptionFailure",
            SubscriptionDeleteRequest { .. } => "RICsubscriptionDeleteRequest",
            SubscriptionDeleteResponse { .. } => "RICsubscriptionDeleteResponse",
            Indication { .. } => "RICindication",
            ControlRequest { .. } => "RICcontrolRequest",
            ControlAcknowledge { .. } => "RICcontrolAcknowledge",
            ControlFailure { .. } => "RICcontrolFailure",
            ServiceUpdate { .. } => "RICserviceUpdate",
            ServiceUpdateAcknowledge { .. } => "RICserviceUpdateAcknowledge",
            ErrorIndication { .. } => "ErrorIndication",
        }
    }

    pub fn request_id(&self) -> Option<RicRequestId> {
        use E2apMessage::*;
        match self {
            SubscriptionRequest { request_id, .. }
            | SubscriptionResponse { request_id, .. }
            | SubscriptionFailure { request_id, .. }
            | SubscriptionDeleteRequest { request_id, .. }
            | SubscriptionDeleteResponse { request_id }
            | Indication { request_id, .. }
            | ControlRequest { request_id, .. }
            | ControlAcknowledge { request_id, .. }
            | ControlFailure { request_id, .. } => Some(*request_id),
            _ => None,
        }
    }
}

/// One E2AP protocol data unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct E2apPdu {
    pub class: PduClass,
    pub procedure_code: u16,
    pub body: E2apMessage,
}

impl E2apPdu {
    /// Builds a PDU whose class and procedure code match the body.
    pub fn new(body: E2apMessage) -> Self {
        let (class, procedure_code) = body.class_and_code();
        Self {
            class,
            procedure_code,
            body,
        }
    }

    /// Checks every invariant the encoder relies on.
    pub fn validate(&self) -> Result<(), CodecError> {
        let (class, code) = self.body.class_and_code();
        if class != self.class || code != self.procedure_code {
            return Err(CodecError::InvariantViolation(format!(
                "{} requires class {} code {}, pdu carries class {} code {}",
                self.body.name(),
                class.name(),
                code,
                self.class.name(),
                self.procedure_code
            )));
        }
        let check_len = |what: &str, len: usize| {
            if len > MAX_VALUE_LEN {
                Err(CodecError::InvariantViolation(format!(
                    "{what} of {len} bytes exceeds {MAX_VALUE_LEN}"
                )))
            } else {
                Ok(())
            }
        };
        use E2apMessage::*;
        match &self.body {
            SetupRequest { functions, .. } => {
                for f in functions {
                    check_len("RAN function definition", f.definition.len())?;
                }
                unique_ids("RAN function", functions.iter().map(|f| f.function_id))?;
            }
            ServiceUpdate {
                added, modified, ..
            } => {
                for f in added.iter().chain(modified) {
                    check_len("RAN function definition", f.definition.len())?;
                }
            }
            SubscriptionRequest {
                event_trigger,
                actions,
                ..
            } => {
                check_len("event trigger", event_trigger.len())?;
                for a in actions {
                    check_len("action definition", a.definition.len())?;
                }
                unique_ids("action", actions.iter().map(|a| a.action_id as u16))?;
            }
            Indication {
                indication_type,
                header,
                message,
                call_process_id,
                ..
            } => {
                check_len("indication header", header.len())?;
                check_len("indication message", message.len())?;
                if let Some(cp) = call_process_id {
                    check_len("call process id", cp.len())?;
                }
                if *indication_type == IndicationType::Insert && call_process_id.is_none() {
                    return Err(CodecError::InvariantViolation(
                        "insert indication without call process id".into(),
                    ));
                }
            }
            ControlRequest {
                header,
                message,
                call_process_id,
                ..
            } => {
                check_len("control header", header.len())?;
                check_len("control message", message.len())?;
                if let Some(cp) = call_process_id {
                    check_len("call process id", cp.len())?;
                }
            }
            ControlAcknowledge { outcome, .. } => check_len("control outcome", outcome.len())?,
            _ => {}
        }
        Ok(())
    }
}

fn unique_ids(what: &str, ids: impl Iterator<Item = u16>) -> Result<(), CodecError> {
    let mut seen = std::collections::BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CodecError::InvariantViolation(format!(
                "duplicate {what} id {id}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn code_table_both_directions() {
        let rid = RicRequestId::new(1, 1);
        let sub = E2apPdu::new(E2apMessage::SubscriptionRequest {
            request_id: rid,
            function_id: 0,
            event_trigger: vec![],
            actions: vec![],
        });
        assert_eq!(sub.procedure_code, 8);
        let ind = E2apPdu::new(E2apMessage::Indication {
            request_id: rid,
            function_id: 0,
            action_id: 1,
            sequence_number: None,
            indication_type: IndicationType::Report,
            header: vec![],
            message: vec![],
            call_process_id: None,
        });
        assert_eq!(ind.procedure_code, 5);
    }

    #[test]
    fn mismatched_code_is_invariant_violation() {
        let mut pdu = E2apPdu::new(E2apMessage::SubscriptionDeleteResponse {
            request_id: RicRequestId::new(1, 2),
        });
        pdu.procedure_code = 5;
        assert!(matches!(
            pdu.validate(),
            Err(CodecError::InvariantViolation(_))
        ));
    }

    #[test]
    fn insert_requires_call_process_id() {
        let pdu = E2apPdu::new(E2apMessage::Indication {
            request_id: RicRequestId::new(1, 2),
            function_id: 2,
            action_id: 1,
            sequence_number: Some(1),
            indication_type: IndicationType::Insert,
            header: vec![],
            message: vec![],
            call_process_id: None,
        });
        assert!(pdu.validate().is_err());
    }

    #[test]
    fn time_to_wait_codes_are_dense() {
        for (i, t) in TimeToWait::ALL.iter().enumerate() {
            assert_eq!(t.code() as usize, i);
            assert_eq!(TimeToWait::from_name(t.name()), Some(*t));
        }
        assert_eq!(TimeToWait::W10ms.millis(), 10);
    }
}
