//! proptest generators for E2AP PDUs.

use oran_core::e2ap::*;
use proptest::collection::vec;
use proptest::prelude::*;

fn bytes() -> impl Strategy<Value = Vec<u8>> {
    vec(any::<u8>(), 0..24)
}

fn text() -> impl Strategy<Value = String> {
    "[a-z0-9\\-]{0,12}"
}

fn request_id() -> impl Strategy<Value = RicRequestId> {
    (any::<u32>(), any::<u32>()).prop_map(|(r, i)| RicRequestId::new(r, i))
}

fn cause() -> impl Strategy<Value = Cause> {
    (prop::sample::select(CauseKind::ALL.to_vec()), text()).prop_map(|(k, d)| Cause::new(k, d))
}

fn function() -> impl Strategy<Value = RanFunction> {
    (any::<u16>(), text(), any::<u16>(), bytes()).prop_map(|(function_id, name, revision, definition)| {
        RanFunction {
            function_id,
            name,
            revision,
            definition,
        }
    })
}

fn unique_functions() -> impl Strategy<Value = Vec<RanFunction>> {
    vec(function(), 0..4).prop_map(|mut fs| {
        let mut seen = std::collections::BTreeSet::new();
        fs.retain(|f| seen.insert(f.function_id));
        fs
    })
}

fn action() -> impl Strategy<Value = RicAction> {
    let sub = prop::option::of(
        (
            prop::sample::select(vec![SubsequentActionType::Continue, SubsequentActionType::Wait]),
            prop::sample::select(TimeToWait::ALL.to_vec()),
        )
            .prop_map(|(kind, time_to_wait)| SubsequentAction { kind, time_to_wait }),
    );
    (
        any::<u8>(),
        prop::sample::select(vec![ActionType::Report, ActionType::Insert, ActionType::Policy]),
        bytes(),
        sub,
    )
        .prop_map(|(action_id, action_type, definition, subsequent)| RicAction {
            action_id,
            action_type,
            definition,
            subsequent,
        })
}

fn ids16() -> impl Strategy<Value = Vec<u16>> {
    vec(any::<u16>(), 0..5)
}

pub fn message() -> impl Strategy<Value = E2apMessage> {
    use E2apMessage::*;
    prop_oneof![
        (text(), unique_functions()).prop_map(|(node_id, functions)| SetupRequest { node_id, functions }),
        (ids16(), ids16()).prop_map(|(accepted_ids, rejected_ids)| SetupResponse {
            accepted_ids,
            rejected_ids
        }),
        (request_id(), any::<u16>(), bytes(), vec(action(), 0..4)).prop_map(
            |(request_id, function_id, event_trigger, mut actions)| {
                let mut seen = std::collections::BTreeSet::new();
                actions.retain(|a| seen.insert(a.action_id));
                SubscriptionRequest {
                    request_id,
                    function_id,
                    event_trigger,
                    actions,
                }
            }
        ),
        (request_id(), bytes(), bytes()).prop_map(|(request_id, a, r)| SubscriptionResponse {
            request_id,
            admitted_action_ids: a,
            rejected_action_ids: r
        }),
        (request_id(), cause()).prop_map(|(request_id, cause)| SubscriptionFailure { request_id, cause }),
        (request_id(), any::<u16>())
            .prop_map(|(request_id, function_id)| SubscriptionDeleteRequest { request_id, function_id }),
        request_id().prop_map(|request_id| SubscriptionDeleteResponse { request_id }),
        (
            request_id(),
            any::<u16>(),
            any::<u8>(),
            prop::option::of(any::<u32>()),
            any::<bool>(),
            bytes(),
            bytes(),
            bytes()
        )
            .prop_map(|(request_id, function_id, action_id, sn, insert, header, message, cp)| {
                Indication {
                    request_id,
                    function_id,
                    action_id,
                    sequence_number: sn,
                    indication_type: if insert { IndicationType::Insert } else { IndicationType::Report },
                    header,
                    message,
                    call_process_id: if insert { Some(cp) } else { None },
                }
            }),
        (request_id(), any::<u16>(), prop::option::of(bytes()), bytes(), bytes(), any::<bool>()).prop_map(
            |(request_id, function_id, call_process_id, header, message, ack_requested)| ControlRequest {
                request_id,
                function_id,
                call_process_id,
                header,
                message,
                ack_requested
            }
        ),
        (request_id(), bytes()).prop_map(|(request_id, outcome)| ControlAcknowledge { request_id, outcome }),
        (request_id(), cause()).prop_map(|(request_id, cause)| ControlFailure { request_id, cause }),
        (vec(function(), 0..3), vec(function(), 0..3), ids16())
            .prop_map(|(added, modified, deleted)| ServiceUpdate { added, modified, deleted }),
        ids16().prop_map(|accepted_ids| ServiceUpdateAcknowledge { accepted_ids }),
        cause().prop_map(|cause| ErrorIndication { cause }),
    ]
}

pub fn pdu() -> impl Strategy<Value = E2apPdu> {
    message().prop_map(E2apPdu::new)
}

/// Reference subscription request: requestor 123, instance 34, report action.
pub fn reference_subscription() -> E2apPdu {
    E2apPdu::new(E2apMessage::SubscriptionRequest {
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
    })
}

/// Reference report indication: instance 26, sequence 24.
pub fn reference_indication() -> E2apPdu {
    E2apPdu::new(E2apMessage::Indication {
        request_id: RicRequestId::new(123, 26),
        function_id: 0,
        action_id: 1,
        sequence_number: Some(24),
        indication_type: IndicationType::Report,
        header: vec![],
        message: vec![],
        call_process_id: None,
    })
}

pub const REFERENCE_SUBSCRIPTION_LINES: &[&str] = &[
    "initiatingMessage:",
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
];

pub const REFERENCE_INDICATION_LINES: &[&str] = &[
    "initiatingMessage:",
    "procedureCode: 5",
    "ricRequestorID: 123",
    "ricInstanceID: 26",
    "RANfunctionID: 0",
    "RICactionID: 1",
    "RICindicationSN: 24",
    "RICindicationType: report",
];

/// Lines of `text`, trimmed, missing from `expected`.
pub fn missing_lines(text: &str, expected: &[&str]) -> Vec<String> {
    let lines: Vec<&str> = text.lines().map(str::trim).collect();
    expected
        .iter()
        .filter(|e| !lines.contains(e))
        .map(|e| e.to_string())
        .collect()
}
