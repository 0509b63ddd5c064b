use super::*;
use std::fmt::Write;

/// Renders a PDU as indented `name: value` lines mirroring the E2AP IE
/// structure. Opaque byte fields print as space-separated hex.
pub fn render_debug(pdu: &E2apPdu) -> String {
    let mut out = Lines::default();
    out.line(0, "E2AP-PDU:");
    out.line(1, &format!("{}:", pdu.class.name()));
    out.line(2, &format!("procedureCode: {}", pdu.procedure_code));
    out.line(2, &format!("{}:", pdu.body.name()));
    render_body(&mut out, 3, &pdu.body);
    out.0
}

#[derive(Default)]
struct Lines(String);

impl Lines {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.0.push_str("  ");
        }
        self.0.push_str(text);
        self.0.push('\n');
    }

    fn field(&mut self, depth: usize, name: &str, value: impl std::fmt::Display) {
        self.line(depth, &format!("{name}: {value}"));
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    if bytes.is_empty() {
        return "\"\"".into();
    }
    let mut s = String::with_capacity(bytes.len() * 3);
    for (i, b) in bytes.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn request_id(out: &mut Lines, d: usize, id: &RicRequestId) {
    out.line(d, "RICrequestID:");
    out.field(d + 1, "ricRequestorID", id.requestor_id);
    out.field(d + 1, "ricInstanceID", id.instance_id);
}

fn functions(out: &mut Lines, d: usize, name: &str, fs: &[RanFunction]) {
    if fs.is_empty() {
        out.line(d, &format!("{name}: []"));
        return;
    }
    out.line(d, &format!("{name}:"));
    for f in fs {
        out.line(d + 1, "- RANfunction-Item:");
        out.field(d + 3, "RANfunctionID", f.function_id);
        out.field(d + 3, "ranFunctionOID", &f.name);
        out.field(d + 3, "ranFunctionRevision", f.revision);
        out.field(d + 3, "ranFunctionDefinition", hex(&f.definition));
    }
}

fn id_list<T: std::fmt::Display>(out: &mut Lines, d: usize, name: &str, ids: &[T]) {
    let joined: Vec<String> = ids.iter().map(ToString::to_string).collect();
    out.line(d, &format!("{name}: [{}]", joined.join(", ")));
}

fn cause(out: &mut Lines, d: usize, c: &Cause) {
    out.line(d, "Cause:");
    out.field(d + 1, "kind", c.kind.name());
    out.field(d + 1, "detail", format!("{:?}", c.detail));
}

fn render_body(out: &mut Lines, d: usize, body: &E2apMessage) {
    use E2apMessage::*;
    match body {
        SetupRequest {
            node_id,
            functions: fs,
        } => {
            out.field(d, "GlobalE2node-ID", node_id);
            functions(out, d, "functions", fs);
        }
        SetupResponse {
            accepted_ids,
            rejected_ids,
        } => {
            id_list(out, d, "RANfunctionsAccepted", accepted_ids);
            id_list(out, d, "RANfunctionsRejected", rejected_ids);
        }
        SubscriptionRequest {
            request_id: rid,
            function_id,
            event_trigger,
            actions,
        } => {
            request_id(out, d, rid);
            out.field(d, "RANfunctionID", function_id);
            out.line(d, "RICsubscriptionDetails:");
            out.field(d + 1, "ricEventTriggerDefinition", hex(event_trigger));
            if actions.is_empty() {
                out.line(d + 1, "ricAction-ToBeSetup-List: []");
            } else {
                out.line(d + 1, "ricAction-ToBeSetup-List:");
            }
            for a in actions {
                out.line(d + 2, "- RICaction-ToBeSetup-Item:");
                out.field(d + 4, "ricActionID", a.action_id);
                out.field(d + 4, "ricActionType", a.action_type.name());
                out.field(d + 4, "ricActionDefinition", hex(&a.definition));
                if let Some(s) = &a.subsequent {
                    out.line(d + 4, "ricSubsequentAction:");
                    out.field(d + 5, "ricSubsequentActionType", s.kind.name());
                    out.field(d + 5, "ricTimeToWait", s.time_to_wait.name());
                }
            }
        }
        SubscriptionResponse {
            request_id: rid,
            admitted_action_ids,
            rejected_action_ids,
        } => {
            request_id(out, d, rid);
            id_list(out, d, "RICaction-Admitted-List", admitted_action_ids);
            id_list(out, d, "RICaction-NotAdmitted-List", rejected_action_ids);
        }
        SubscriptionFailure {
            request_id: rid,
            cause: c,
        }
        | ControlFailure {
            request_id: rid,
            cause: c,
        } => {
            request_id(out, d, rid);
            cause(out, d, c);
        }
        SubscriptionDeleteRequest {
            request_id: rid,
            function_id,
        } => {
            request_id(out, d, rid);
            out.field(d, "RANfunctionID", function_id);
        }
        SubscriptionDeleteResponse { request_id: rid } => request_id(out, d, rid),
        Indication {
            request_id: rid,
            function_id,
            action_id,
            sequence_number,
            indication_type,
            header,
            message,
            call_process_id,
        } => {
            request_id(out, d, rid);
            out.field(d, "RANfunctionID", function_id);
            out.field(d, "RICactionID", action_id);
            if let Some(sn) = sequence_number {
                out.field(d, "RICindicationSN", sn);
            }
            out.field(d, "RICindicationType", indication_type.name());
            out.field(d, "RICindicationHeader", hex(header));
            out.field(d, "RICindicationMessage", hex(message));
            if let Some(cp) = call_process_id {
                out.field(d, "RICcallProcessID", hex(cp));
            }
        }
        ControlRequest {
            request_id: rid,
            function_id,
            call_process_id,
            header,
            message,
            ack_requested,
        } => {
            request_id(out, d, rid);
            out.field(d, "RANfunctionID", function_id);
            if let Some(cp) = call_process_id {
                out.field(d, "RICcallProcessID", hex(cp));
            }
            out.field(d, "RICcontrolHeader", hex(header));
            out.field(d, "RICcontrolMessage", hex(message));
            out.field(
                d,
                "RICcontrolAckRequest",
                if *ack_requested { "ack" } else { "noAck" },
            );
        }
        ControlAcknowledge {
            request_id: rid,
            outcome,
        } => {
            request_id(out, d, rid);
            out.field(d, "RICcontrolOutcome", hex(outcome));
        }
        ServiceUpdate {
            added,
            modified,
            deleted,
        } => {
            functions(out, d, "RANfunctionsAdded", added);
            functions(out, d, "RANfunctionsModified", modified);
            id_list(out, d, "RANfunctionsDeleted", deleted);
        }
        ServiceUpdateAcknowledge { accepted_ids } => {
            id_list(out, d, "RANfunctionsAccepted", accepted_ids);
        }
        ErrorIndication { cause: c } => cause(out, d, c),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn setup_without_functions_renders_empty_list() {
        let pdu = E2apPdu::new(E2apMessage::SetupRequest {
            node_id: "du-0".into(),
            functions: vec![],
        });
        let text = render_debug(&pdu);
        assert!(text.contains("functions: []"), "{text}");
        assert!(text.contains("GlobalE2node-ID: du-0"));
    }

    #[test]
    fn subscription_lines() {
        let pdu = E2apPdu::new(E2apMessage::SubscriptionRequest {
            request_id: RicRequestId::new(123, 34),
            function_id: 1,
            event_trigger: vec![0x31, 0x32, 0x33, 0x34],
            actions: vec![RicAction {
                action_id: 1,
                action_type: ActionType::Report,
                definition: vec![0x35, 0x36, 0x37, 0x38],
                subsequent: Some(SubsequentAction {
                    kind: SubsequentActionType::Continue,
                    time_to_wait: TimeToWait::W10ms,
                }),
            }],
        });
        let text = render_debug(&pdu);
        let lines: Vec<&str> = text.lines().map(str::trim).collect();
        for expected in [
            "procedureCode: 8",
            "ricRequestorID: 123",
            "ricInstanceID: 34",
            "RANfunctionID: 1",
            "ricEventTriggerDefinition: 31 32 33 34",
            "ricActionID: 1",
            "ricActionType: report",
            "ricActionDefinition: 35 36 37 38",
            "ricSubsequentActionType: continue",
            "ricTimeToWait: w10ms",
        ] {
            assert!(lines.contains(&expected), "missing `{expected}` in\n{text}");
        }
    }
}
