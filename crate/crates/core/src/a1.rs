//! A1 wire schema shared by the non-RT RIC and the near-RT RIC: one JSON
//! object per frame.
//!
//! Requests: `{"op": "create"|"update", "policy_id", "policy_type_id",
//! "scope", "statements"}`, `{"op": "delete"|"query", "policy_id"}`,
//! `{"op": "ei", "topic", "producer", "epoch", "payload"}`.
//! Replies: `{"policy_id", "enforced", "at_ms"}` feedback, or
//! `{"policy_id", "error"}`.

pub use crate::e2sm::Comparator;
use crate::ids::{Millis, SliceId};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// The one policy type implemented: per-slice objectives and priorities.
pub const SLICING_POLICY_TYPE: u32 = 20008;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyScope {
    Ue(u64),
    UeGroup(Vec<u64>),
    Slice(u8),
    Cell(u32),
    QosClass(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatementKind {
    Resource,
    Objective,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Statement {
    pub kind: StatementKind,
    pub name: String,
    pub comparator: Comparator,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A1Policy {
    pub policy_id: String,
    pub policy_type_id: u32,
    pub scope: PolicyScope,
    pub statements: Vec<Statement>,
}

impl A1Policy {
    pub fn slice(&self) -> Option<SliceId> {
        match self.scope {
            PolicyScope::Slice(s) => Some(SliceId(s)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnrichmentMessage {
    pub topic: String,
    pub producer: String,
    pub epoch: u64,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum A1Request {
    Create(A1Policy),
    Update(A1Policy),
    Delete { policy_id: String },
    Query {
        #[serde(default)]
        policy_id: Option<String>,
    },
    Ei(EnrichmentMessage),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum A1Reply {
    Feedback {
        policy_id: String,
        enforced: bool,
        at_ms: Millis,
    },
    Error {
        policy_id: String,
        error: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("unknown policy type {0}")]
    UnknownPolicyType(u32),
    #[error("policy violates type {SLICING_POLICY_TYPE}: {0}")]
    Violation(String),
}

/// Objective statements accepted by the slicing policy type, with the
/// comparators that make sense for each.
const OBJECTIVES: &[(&str, &[Comparator])] = &[
    ("latency_proxy_ms", &[Comparator::Le, Comparator::Lt]),
    ("throughput_bytes_per_s", &[Comparator::Ge, Comparator::Gt]),
    ("tx_packets", &[Comparator::Ge, Comparator::Gt]),
];

/// Checks a policy against its registered type.
pub fn validate_policy(p: &A1Policy) -> Result<(), SchemaError> {
    if p.policy_type_id != SLICING_POLICY_TYPE {
        return Err(SchemaError::UnknownPolicyType(p.policy_type_id));
    }
    let bad = |m: String| Err(SchemaError::Violation(m));
    if p.policy_id.is_empty() {
        return bad("empty policy_id".into());
    }
    if !matches!(p.scope, PolicyScope::Slice(_) | PolicyScope::Cell(_)) {
        return bad("scope must be a slice or a cell".into());
    }
    if p.statements.is_empty() {
        return bad("at least one statement required".into());
    }
    for s in &p.statements {
        if !s.value.is_finite() || s.value < 0.0 {
            return bad(format!("`{}` needs a non-negative finite value", s.name));
        }
        match s.kind {
            StatementKind::Objective => {
                let Some((_, cmps)) = OBJECTIVES.iter().find(|(n, _)| *n == s.name) else {
                    return bad(format!("unknown objective `{}`", s.name));
                };
                if !cmps.contains(&s.comparator) {
                    return bad(format!(
                        "comparator `{}` not valid for `{}`",
                        s.comparator.as_str(),
                        s.name
                    ));
                }
                if s.value == 0.0 {
                    return bad(format!("`{}` threshold must be positive", s.name));
                }
            }
            StatementKind::Resource => {
                if s.name != "priority" || s.comparator != Comparator::Eq {
                    return bad(format!("unknown resource statement `{}`", s.name));
                }
                if s.value.fract() != 0.0 {
                    return bad("priority rank must be an integer".into());
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_json_shape() {
        let text = r#"{"op":"create","policy_id":"p1","policy_type_id":20008,
            "scope":{"slice":0},
            "statements":[{"kind":"objective","name":"latency_proxy_ms","comparator":"le","value":5}]}"#;
        let req: A1Request = serde_json::from_str(text).unwrap();
        let A1Request::Create(p) = &req else { panic!() };
        assert_eq!(p.slice(), Some(SliceId(0)));
        validate_policy(p).unwrap();
        let back: A1Request = serde_json::from_str(&serde_json::to_string(&req).unwrap()).unwrap();
        assert_eq!(back, req);
    }

    #[test]
    fn feedback_shape() {
        let f = A1Reply::Feedback {
            policy_id: "p1".into(),
            enforced: true,
            at_ms: 1200,
        };
        assert_eq!(
            serde_json::to_string(&f).unwrap(),
            r#"{"policy_id":"p1","enforced":true,"at_ms":1200}"#
        );
    }

    #[test]
    fn schema_violations() {
        let mut p = A1Policy {
            policy_id: "p".into(),
            policy_type_id: SLICING_POLICY_TYPE,
            scope: PolicyScope::Slice(0),
            statements: vec![Statement {
                kind: StatementKind::Objective,
                name: "latency_proxy_ms".into(),
                comparator: Comparator::Ge,
                value: 5.0,
            }],
        };
        assert!(matches!(validate_policy(&p), Err(SchemaError::Violation(_))));
        p.statements[0].comparator = Comparator::Le;
        assert!(validate_policy(&p).is_ok());
        p.policy_type_id = 1;
        assert_eq!(validate_policy(&p), Err(SchemaError::UnknownPolicyType(1)));
    }
}
