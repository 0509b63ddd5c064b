use super::*;
use crate::tlv::{fixed, TlvError, TlvReader, TlvWriter};

/// Top-level container tag (`protocolIEs`).
const TAG_IES: u8 = 0x00;

// Field tags follow the E2AP protocol IE ids.
const IE_CAUSE: u8 = 1;
const IE_GLOBAL_E2NODE_ID: u8 = 3;
const IE_RAN_FUNCTION_ID: u8 = 5;
const IE_RAN_FUNCTION_ITEM: u8 = 8;
const IE_RAN_FUNCTIONS_ACCEPTED: u8 = 9;
const IE_RAN_FUNCTIONS_ADDED: u8 = 10;
const IE_RAN_FUNCTIONS_DELETED: u8 = 11;
const IE_RAN_FUNCTIONS_MODIFIED: u8 = 12;
const IE_RAN_FUNCTIONS_REJECTED: u8 = 13;
const IE_ACTION_ID: u8 = 15;
const IE_ACTIONS_ADMITTED: u8 = 17;
const IE_ACTIONS_NOT_ADMITTED: u8 = 18;
const IE_ACTION_TO_BE_SETUP_ITEM: u8 = 19;
const IE_CALL_PROCESS_ID: u8 = 20;
const IE_CONTROL_ACK_REQUEST: u8 = 21;
const IE_CONTROL_HEADER: u8 = 22;
const IE_CONTROL_MESSAGE: u8 = 23;
const IE_INDICATION_HEADER: u8 = 25;
const IE_INDICATION_MESSAGE: u8 = 26;
const IE_INDICATION_SN: u8 = 27;
const IE_INDICATION_TYPE: u8 = 28;
const IE_REQUEST_ID: u8 = 29;
const IE_SUBSCRIPTION_DETAILS: u8 = 30;
const IE_CONTROL_OUTCOME: u8 = 32;

// Tags local to composite values.
const F_FUNC_ID: u8 = 1;
const F_FUNC_NAME: u8 = 2;
const F_FUNC_REVISION: u8 = 3;
const F_FUNC_DEFINITION: u8 = 4;

const F_DETAILS_TRIGGER: u8 = 1;
const F_DETAILS_ACTIONS: u8 = 2;

const F_ACTION_ID: u8 = 1;
const F_ACTION_TYPE: u8 = 2;
const F_ACTION_DEFINITION: u8 = 3;
const F_ACTION_SUBSEQUENT: u8 = 4;

const F_SUBSEQ_TYPE: u8 = 1;
const F_SUBSEQ_WAIT: u8 = 2;

const F_CAUSE_KIND: u8 = 1;
const F_CAUSE_DETAIL: u8 = 2;

/// Encodes a PDU into its canonical byte form.
pub fn encode(pdu: &E2apPdu) -> Result<Vec<u8>, CodecError> {
    pdu.validate()?;
    let mut out = Vec::with_capacity(64);
    out.push(WIRE_VERSION);
    out.push(pdu.class.code());
    out.extend_from_slice(&pdu.procedure_code.to_be_bytes());
    let mut w = TlvWriter::new();
    w.nested(TAG_IES, |w| write_body(w, &pdu.body))
        .map_err(to_invariant)?;
    out.extend_from_slice(&w.into_bytes());
    Ok(out)
}

/// Decodes a canonical encoding, rejecting anything `encode` would not emit.
pub fn decode(data: &[u8]) -> Result<E2apPdu, CodecError> {
    if data.len() < 4 {
        return Err(CodecError::MalformedFrame(format!(
            "{} bytes is shorter than the 4-byte header",
            data.len()
        )));
    }
    if data[0] != WIRE_VERSION {
        return Err(CodecError::MalformedFrame(format!(
            "unsupported version 0x{:02x}",
            data[0]
        )));
    }
    let class = PduClass::from_code(data[1])
        .ok_or_else(|| CodecError::MalformedFrame(format!("bad pdu class {}", data[1])))?;
    let code = u16::from_be_bytes([data[2], data[3]]);
    if !matches!(
        code,
        procedure::SETUP
            | procedure::SERVICE_UPDATE
            | procedure::ERROR_INDICATION
            | procedure::CONTROL
            | procedure::INDICATION
            | procedure::SUBSCRIPTION
            | procedure::SUBSCRIPTION_DELETE
    ) {
        return Err(CodecError::UnknownProcedureCode(code));
    }
    let mut outer = TlvReader::with_base(&data[4..], 4);
    let mut r = outer.nested(TAG_IES).map_err(to_malformed)?;
    outer.finish().map_err(to_malformed)?;
    let body = read_body(&mut r, class, code)?;
    r.finish().map_err(to_malformed)?;
    let pdu = E2apPdu {
        class,
        procedure_code: code,
        body,
    };
    pdu.validate()?;
    Ok(pdu)
}

fn to_invariant(e: TlvError) -> CodecError {
    CodecError::InvariantViolation(e.to_string())
}

fn to_malformed(e: TlvError) -> CodecError {
    CodecError::MalformedFrame(e.to_string())
}

fn write_request_id(w: &mut TlvWriter, id: &RicRequestId) -> Result<(), TlvError> {
    let mut raw = [0u8; 8];
    raw[..4].copy_from_slice(&id.requestor_id.to_be_bytes());
    raw[4..].copy_from_slice(&id.instance_id.to_be_bytes());
    w.bytes(IE_REQUEST_ID, &raw)
}

fn read_request_id(r: &mut TlvReader<'_>) -> Result<RicRequestId, TlvError> {
    let raw: [u8; 8] = fixed(IE_REQUEST_ID, r.expect(IE_REQUEST_ID)?)?;
    Ok(RicRequestId {
        requestor_id: u32::from_be_bytes([raw[0], raw[1], raw[2], raw[3]]),
        instance_id: u32::from_be_bytes([raw[4], raw[5], raw[6], raw[7]]),
    })
}

fn write_function(w: &mut TlvWriter, f: &RanFunction) -> Result<(), TlvError> {
    w.nested(IE_RAN_FUNCTION_ITEM, |w| {
        w.u16(F_FUNC_ID, f.function_id)?;
        w.str(F_FUNC_NAME, &f.name)?;
        w.u16(F_FUNC_REVISION, f.revision)?;
        w.bytes(F_FUNC_DEFINITION, &f.definition)
    })
}

fn read_function(mut r: TlvReader<'_>) -> Result<RanFunction, TlvError> {
    let f = RanFunction {
        function_id: r.u16(F_FUNC_ID)?,
        name: r.string(F_FUNC_NAME)?,
        revision: r.u16(F_FUNC_REVISION)?,
        definition: r.expect(F_FUNC_DEFINITION)?.to_vec(),
    };
    r.finish()?;
    Ok(f)
}

fn write_function_list(w: &mut TlvWriter, tag: u8, fs: &[RanFunction]) -> Result<(), TlvError> {
    w.nested(tag, |w| fs.iter().try_for_each(|f| write_function(w, f)))
}

fn read_function_list(r: &mut TlvReader<'_>, tag: u8) -> Result<Vec<RanFunction>, TlvError> {
    let mut list = r.nested(tag)?;
    let items = list
        .repeated(IE_RAN_FUNCTION_ITEM)?
        .into_iter()
        .map(read_function)
        .collect::<Result<Vec<_>, _>>()?;
    list.finish()?;
    Ok(items)
}

fn write_id_list(w: &mut TlvWriter, tag: u8, ids: &[u16]) -> Result<(), TlvError> {
    w.nested(tag, |w| {
        ids.iter().try_for_each(|id| w.u16(IE_RAN_FUNCTION_ID, *id))
    })
}

fn read_id_list(r: &mut TlvReader<'_>, tag: u8) -> Result<Vec<u16>, TlvError> {
    let mut list = r.nested(tag)?;
    let mut ids = Vec::new();
    while !list.is_empty() {
        ids.push(list.u16(IE_RAN_FUNCTION_ID)?);
    }
    Ok(ids)
}

fn write_action_id_list(w: &mut TlvWriter, tag: u8, ids: &[u8]) -> Result<(), TlvError> {
    w.nested(tag, |w| ids.iter().try_for_each(|id| w.u8(IE_ACTION_ID, *id)))
}

fn read_action_id_list(r: &mut TlvReader<'_>, tag: u8) -> Result<Vec<u8>, TlvError> {
    let mut list = r.nested(tag)?;
    let mut ids = Vec::new();
    while !list.is_empty() {
        ids.push(list.u8(IE_ACTION_ID)?);
    }
    Ok(ids)
}

fn write_cause(w: &mut TlvWriter, c: &Cause) -> Result<(), TlvError> {
    w.nested(IE_CAUSE, |w| {
        w.u8(F_CAUSE_KIND, c.kind.code())?;
        w.str(F_CAUSE_DETAIL, &c.detail)
    })
}

fn read_cause(r: &mut TlvReader<'_>) -> Result<Cause, TlvError> {
    let mut c = r.nested(IE_CAUSE)?;
    let code = c.u8(F_CAUSE_KIND)?;
    let kind = CauseKind::from_code(code).ok_or(TlvError::BadValue {
        tag: F_CAUSE_KIND,
        reason: format!("cause kind {code}"),
    })?;
    let detail = c.string(F_CAUSE_DETAIL)?;
    c.finish()?;
    Ok(Cause { kind, detail })
}

fn write_action(w: &mut TlvWriter, a: &RicAction) -> Result<(), TlvError> {
    w.nested(IE_ACTION_TO_BE_SETUP_ITEM, |w| {
        w.u8(F_ACTION_ID, a.action_id)?;
        w.u8(F_ACTION_TYPE, a.action_type.code())?;
        w.bytes(F_ACTION_DEFINITION, &a.definition)?;
        if let Some(s) = &a.subsequent {
            w.nested(F_ACTION_SUBSEQUENT, |w| {
                w.u8(
                    F_SUBSEQ_TYPE,
                    match s.kind {
                        SubsequentActionType::Continue => 0,
                        SubsequentActionType::Wait => 1,
                    },
                )?;
                w.u8(F_SUBSEQ_WAIT, s.time_to_wait.code())
            })?;
        }
        Ok(())
    })
}

fn read_action(mut r: TlvReader<'_>) -> Result<RicAction, TlvError> {
    let action_id = r.u8(F_ACTION_ID)?;
    let type_code = r.u8(F_ACTION_TYPE)?;
    let action_type = ActionType::from_code(type_code).ok_or(TlvError::BadValue {
        tag: F_ACTION_TYPE,
        reason: format!("action type {type_code}"),
    })?;
    let definition = r.expect(F_ACTION_DEFINITION)?.to_vec();
    let subsequent = match r.optional_nested(F_ACTION_SUBSEQUENT)? {
        None => None,
        Some(mut s) => {
            let kind = match s.u8(F_SUBSEQ_TYPE)? {
                0 => SubsequentActionType::Continue,
                1 => SubsequentActionType::Wait,
                v => {
                    return Err(TlvError::BadValue {
                        tag: F_SUBSEQ_TYPE,
                        reason: format!("subsequent action type {v}"),
                    })
                }
            };
            let wait = s.u8(F_SUBSEQ_WAIT)?;
            let time_to_wait = TimeToWait::from_code(wait).ok_or(TlvError::BadValue {
                tag: F_SUBSEQ_WAIT,
                reason: format!("time to wait {wait}"),
            })?;
            s.finish()?;
            Some(SubsequentAction { kind, time_to_wait })
        }
    };
    r.finish()?;
    Ok(RicAction {
        action_id,
        action_type,
        definition,
        subsequent,
    })
}

fn write_body(w: &mut TlvWriter, body: &E2apMessage) -> Result<(), TlvError> {
    use E2apMessage::*;
    match body {
        SetupRequest { node_id, functions } => {
            w.str(IE_GLOBAL_E2NODE_ID, node_id)?;
            write_function_list(w, IE_RAN_FUNCTIONS_ADDED, functions)
        }
        SetupResponse {
            accepted_ids,
            rejected_ids,
        } => {
            write_id_list(w, IE_RAN_FUNCTIONS_ACCEPTED, accepted_ids)?;
            write_id_list(w, IE_RAN_FUNCTIONS_REJECTED, rejected_ids)
        }
        SubscriptionRequest {
            request_id,
            function_id,
            event_trigger,
            actions,
        } => {
            write_request_id(w, request_id)?;
            w.u16(IE_RAN_FUNCTION_ID, *function_id)?;
            w.nested(IE_SUBSCRIPTION_DETAILS, |w| {
                w.bytes(F_DETAILS_TRIGGER, event_trigger)?;
                w.nested(F_DETAILS_ACTIONS, |w| {
                    actions.iter().try_for_each(|a| write_action(w, a))
                })
            })
        }
        SubscriptionResponse {
            request_id,
            admitted_action_ids,
            rejected_action_ids,
        } => {
            write_request_id(w, request_id)?;
            write_action_id_list(w, IE_ACTIONS_ADMITTED, admitted_action_ids)?;
            write_action_id_list(w, IE_ACTIONS_NOT_ADMITTED, rejected_action_ids)
        }
        SubscriptionFailure { request_id, cause } | ControlFailure { request_id, cause } => {
            write_request_id(w, request_id)?;
            write_cause(w, cause)
        }
        SubscriptionDeleteRequest {
            request_id,
            function_id,
        } => {
            write_request_id(w, request_id)?;
            w.u16(IE_RAN_FUNCTION_ID, *function_id)
        }
        SubscriptionDeleteResponse { request_id } => write_request_id(w, request_id),
        Indication {
            request_id,
            function_id,
            action_id,
            sequence_number,
            indication_type,
            header,
            message,
            call_process_id,
        } => {
            write_request_id(w, request_id)?;
            w.u16(IE_RAN_FUNCTION_ID, *function_id)?;
            w.u8(IE_ACTION_ID, *action_id)?;
            if let Some(sn) = sequence_number {
                w.u32(IE_INDICATION_SN, *sn)?;
            }
            w.u8(
                IE_INDICATION_TYPE,
                match indication_type {
                    IndicationType::Report => 0,
                    IndicationType::Insert => 1,
                },
            )?;
            w.bytes(IE_INDICATION_HEADER, header)?;
            w.bytes(IE_INDICATION_MESSAGE, message)?;
            if let Some(cp) = call_process_id {
                w.bytes(IE_CALL_PROCESS_ID, cp)?;
            }
            Ok(())
        }
        ControlRequest {
            request_id,
            function_id,
            call_process_id,
            header,
            message,
            ack_requested,
        } => {
            write_request_id(w, request_id)?;
            w.u16(IE_RAN_FUNCTION_ID, *function_id)?;
            if let Some(cp) = call_process_id {
                w.bytes(IE_CALL_PROCESS_ID, cp)?;
            }
            w.bytes(IE_CONTROL_HEADER, header)?;
            w.bytes(IE_CONTROL_MESSAGE, message)?;
            w.flag(IE_CONTROL_ACK_REQUEST, *ack_requested)
        }
        ControlAcknowledge {
            request_id,
            outcome,
        } => {
            write_request_id(w, request_id)?;
            w.bytes(IE_CONTROL_OUTCOME, outcome)
        }
        ServiceUpdate {
            added,
            modified,
            deleted,
        } => {
            write_function_list(w, IE_RAN_FUNCTIONS_ADDED, added)?;
            write_function_list(w, IE_RAN_FUNCTIONS_MODIFIED, modified)?;
            write_id_list(w, IE_RAN_FUNCTIONS_DELETED, deleted)
        }
        ServiceUpdateAcknowledge { accepted_ids } => {
            write_id_list(w, IE_RAN_FUNCTIONS_ACCEPTED, accepted_ids)
        }
        ErrorIndication { cause } => write_cause(w, cause),
    }
}

fn read_body(r: &mut TlvReader<'_>, class: PduClass, code: u16) -> Result<E2apMessage, CodecError> {
    use E2apMessage::*;
    use PduClass::*;
    let body = match (class, code) {
        (Initiating, procedure::SETUP) => SetupRequest {
            node_id: r.string(IE_GLOBAL_E2NODE_ID).map_err(to_malformed)?,
            functions: read_function_list(r, IE_RAN_FUNCTIONS_ADDED).map_err(to_malformed)?,
        },
        (SuccessfulOutcome, procedure::SETUP) => SetupResponse {
            accepted_ids: read_id_list(r, IE_RAN_FUNCTIONS_ACCEPTED).map_err(to_malformed)?,
            rejected_ids: read_id_list(r, IE_RAN_FUNCTIONS_REJECTED).map_err(to_malformed)?,
        },
        (Initiating, procedure::SUBSCRIPTION) => {
            let request_id = read_request_id(r).map_err(to_malformed)?;
            let function_id = r.u16(IE_RAN_FUNCTION_ID).map_err(to_malformed)?;
            let (event_trigger, actions) = (|| {
                let mut d = r.nested(IE_SUBSCRIPTION_DETAILS)?;
                let trigger = d.expect(F_DETAILS_TRIGGER)?.to_vec();
                let mut list = d.nested(F_DETAILS_ACTIONS)?;
                let actions = list
                    .repeated(IE_ACTION_TO_BE_SETUP_ITEM)?
                    .into_iter()
                    .map(read_action)
                    .collect::<Result<Vec<_>, _>>()?;
                list.finish()?;
                d.finish()?;
                Ok::<_, TlvError>((trigger, actions))
            })()
            .map_err(to_malformed)?;
            SubscriptionRequest {
                request_id,
                function_id,
                event_trigger,
                actions,
            }
        }
        (SuccessfulOutcome, procedure::SUBSCRIPTION) => SubscriptionResponse {
            request_id: read_request_id(r).map_err(to_malformed)?,
            admitted_action_ids: read_action_id_list(r, IE_ACTIONS_ADMITTED)
                .map_err(to_malformed)?,
            rejected_action_ids: read_action_id_list(r, IE_ACTIONS_NOT_ADMITTED)
                .map_err(to_malformed)?,
        },
        (UnsuccessfulOutcome, procedure::SUBSCRIPTION) => SubscriptionFailure {
            request_id: read_request_id(r).map_err(to_malformed)?,
            cause: read_cause(r).map_err(to_malformed)?,
        },
        (Initiating, procedure::SUBSCRIPTION_DELETE) => SubscriptionDeleteRequest {
            request_id: read_request_id(r).map_err(to_malformed)?,
            function_id: r.u16(IE_RAN_FUNCTION_ID).map_err(to_malformed)?,
        },
        (SuccessfulOutcome, procedure::SUBSCRIPTION_DELETE) => SubscriptionDeleteResponse {
            request_id: read_request_id(r).map_err(to_malformed)?,
        },
        (Initiating, procedure::INDICATION) => (|| {
            let request_id = read_request_id(r)?;
            let function_id = r.u16(IE_RAN_FUNCTION_ID)?;
            let action_id = r.u8(IE_ACTION_ID)?;
            let sequence_number = match r.optional(IE_INDICATION_SN)? {
                Some(raw) => Some(u32::from_be_bytes(fixed(IE_INDICATION_SN, raw)?)),
                None => None,
            };
            let indication_type = match r.u8(IE_INDICATION_TYPE)? {
                0 => IndicationType::Report,
                1 => IndicationType::Insert,
                v => {
                    return Err(TlvError::BadValue {
                        tag: IE_INDICATION_TYPE,
                        reason: format!("indication type {v}"),
                    })
                }
            };
            Ok(Indication {
                request_id,
                function_id,
                action_id,
                sequence_number,
                indication_type,
                header: r.expect(IE_INDICATION_HEADER)?.to_vec(),
                message: r.expect(IE_INDICATION_MESSAGE)?.to_vec(),
                call_process_id: r.optional(IE_CALL_PROCESS_ID)?.map(<[u8]>::to_vec),
            })
        })()
        .map_err(to_malformed)?,
        (Initiating, procedure::CONTROL) => (|| {
            Ok::<_, TlvError>(ControlRequest {
                request_id: read_request_id(r)?,
                function_id: r.u16(IE_RAN_FUNCTION_ID)?,
                call_process_id: r.optional(IE_CALL_PROCESS_ID)?.map(<[u8]>::to_vec),
                header: r.expect(IE_CONTROL_HEADER)?.to_vec(),
                message: r.expect(IE_CONTROL_MESSAGE)?.to_vec(),
                ack_requested: r.flag(IE_CONTROL_ACK_REQUEST)?,
            })
        })()
        .map_err(to_malformed)?,
        (SuccessfulOutcome, procedure::CONTROL) => ControlAcknowledge {
            request_id: read_request_id(r).map_err(to_malformed)?,
            outcome: r
                .expect(IE_CONTROL_OUTCOME)
                .map_err(to_malformed)?
                .to_vec(),
        },
        (UnsuccessfulOutcome, procedure::CONTROL) => ControlFailure {
            request_id: read_request_id(r).map_err(to_malformed)?,
            cause: read_cause(r).map_err(to_malformed)?,
        },
        (Initiating, procedure::SERVICE_UPDATE) => ServiceUpdate {
            added: read_function_list(r, IE_RAN_FUNCTIONS_ADDED).map_err(to_malformed)?,
            modified: read_function_list(r, IE_RAN_FUNCTIONS_MODIFIED).map_err(to_malformed)?,
            deleted: read_id_list(r, IE_RAN_FUNCTIONS_DELETED).map_err(to_malformed)?,
        },
        (SuccessfulOutcome, procedure::SERVICE_UPDATE) => ServiceUpdateAcknowledge {
            accepted_ids: read_id_list(r, IE_RAN_FUNCTIONS_ACCEPTED).map_err(to_malformed)?,
        },
        (Initiating, procedure::ERROR_INDICATION) => ErrorIndication {
            cause: read_cause(r).map_err(to_malformed)?,
        },
        (class, code) => {
            return Err(CodecError::MalformedFrame(format!(
                "no {} message for procedure code {code}",
                class.name()
            )))
        }
    };
    Ok(body)
}
