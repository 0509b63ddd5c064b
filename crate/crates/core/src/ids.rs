//! Identifier newtypes shared across the RIC, the simulated RAN and the
//! management plane.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Simulated time in milliseconds. Nothing in the simulation path reads a
/// wall clock; every timestamp is derived from the scheduler's tick counter.
pub type Millis = u64;

/// E2 node identifier (the global E2 node id, rendered as text).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_owned())
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct SliceId(pub u8);

impl fmt::Display for SliceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Opaque 64-bit user identifier, stable across E2 nodes for one simulated
/// user. The RAN assigns it; the RIC never interprets it.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct UeId(pub u64);

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Slice service class. Each cell hosts at most one slice of each kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceKind {
    Urllc,
    Embb,
    Mmtc,
}

impl SliceKind {
    pub const ALL: [SliceKind; 3] = [SliceKind::Urllc, SliceKind::Embb, SliceKind::Mmtc];

    pub fn index(self) -> usize {
        match self {
            SliceKind::Urllc => 0,
            SliceKind::Embb => 1,
            SliceKind::Mmtc => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SliceKind::Urllc => "urllc",
            SliceKind::Embb => "embb",
            SliceKind::Mmtc => "mmtc",
        }
    }

    pub fn code(self) -> u8 {
        self.index() as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        SliceKind::ALL.get(c as usize).copied()
    }
}

impl fmt::Display for SliceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SliceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "urllc" => Ok(SliceKind::Urllc),
            "embb" => Ok(SliceKind::Embb),
            "mmtc" => Ok(SliceKind::Mmtc),
            other => Err(format!("unknown slice kind `{other}`")),
        }
    }
}
