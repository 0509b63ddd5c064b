//! Direct-conflict guard (per-target locks held for a guard window) and
//! post-action verification of acknowledged controls.

use crate::e2sm::RcControl;
use crate::ids::{CellId, Millis, NodeId, SliceId, SliceKind};
use std::collections::BTreeMap;
use std::fmt;

/// What a control writes: (node, cell, slice or any, parameter).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConflictKey {
    pub node: NodeId,
    pub cell: Option<CellId>,
    pub slice: Option<SliceId>,
    pub parameter: String,
}

impl ConflictKey {
    pub fn for_control(node: &NodeId, control: &RcControl) -> ConflictKey {
        let (cell, slice, parameter) = match control {
            RcControl::SlicePrbQuota {
                cell_id, slice_id, ..
            }
            | RcControl::SliceScheduler {
                cell_id, slice_id, ..
            } => (Some(*cell_id), Some(*slice_id), control.parameter()),
            RcControl::HandoverCommand { ue_id, .. } => {
                (None, None, format!("serving_cell:ue{ue_id}"))
            }
            RcControl::ControlPolicy { action, .. } => {
                let inner = ConflictKey::for_control(node, action);
                (inner.cell, inner.slice, control.parameter())
            }
            RcControl::OffsetPolicy { parameter_name, .. } => {
                (None, None, parameter_name.clone())
            }
        };
        ConflictKey {
            node: node.clone(),
            cell,
            slice,
            parameter,
        }
    }
}

impl fmt::Display for ConflictKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "*".into());
        write!(
            f,
            "({}, {}, {}, {})",
            self.node,
            opt(self.cell.map(|c| c.to_string())),
            opt(self.slice.map(|s| s.to_string())),
            self.parameter
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlLock {
    pub holder: String,
    pub window_expiry: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LockDecision {
    Pass,
    ConflictRejected { holder: String },
}

#[derive(Debug, Default)]
pub struct LockTable {
    locks: BTreeMap<ConflictKey, ControlLock>,
    window: Millis,
}

impl LockTable {
    pub fn new(window: Millis) -> Self {
        Self {
            locks: BTreeMap::new(),
            window,
        }
    }

    /// Acquires `key` for `xapp` or reports the current holder. A holder
    /// re-writing its own target passes without extending the window; a
    /// lock is only up for grabs once its window has expired.
    pub fn check(&mut self, xapp: &str, key: &ConflictKey, now: Millis) -> LockDecision {
        if let Some(l) = self.locks.get(key) {
            if now < l.window_expiry {
                return if l.holder == xapp {
                    LockDecision::Pass
                } else {
                    LockDecision::ConflictRejected {
                        holder: l.holder.clone(),
                    }
                };
            }
        }
        self.locks.insert(
            key.clone(),
            ControlLock {
                holder: xapp.to_owned(),
                window_expiry: now + self.window,
            },
        );
        LockDecision::Pass
    }

    pub fn holder(&self, key: &ConflictKey, now: Millis) -> Option<&str> {
        self.locks
            .get(key)
            .filter(|l| now < l.window_expiry)
            .map(|l| l.holder.as_str())
    }

    pub fn release_all(&mut self, xapp: &str) {
        self.locks.retain(|_, l| l.holder != xapp);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Improved,
    Degraded,
    Neutral,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Improved => "improved",
            Verdict::Degraded => "degraded",
            Verdict::Neutral => "neutral",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InsufficientData {
    pub before: usize,
    pub after: usize,
}

pub const MIN_VERIFY_SAMPLES: usize = 3;

/// KPM that tracks a slice kind's objective, and whether larger is better.
pub fn objective_metric(kind: SliceKind) -> (&'static str, bool) {
    match kind {
        SliceKind::Urllc => ("latency_proxy_ms", false),
        SliceKind::Embb => ("tx_bytes", true),
        SliceKind::Mmtc => ("tx_packets", true),
    }
}

/// Compares window means; `threshold` is the relative change that counts.
pub fn verify(
    before: &[f64],
    after: &[f64],
    higher_is_better: bool,
    threshold: f64,
) -> Result<Verdict, InsufficientData> {
    if before.len() < MIN_VERIFY_SAMPLES || after.len() < MIN_VERIFY_SAMPLES {
        return Err(InsufficientData {
            before: before.len(),
            after: after.len(),
        });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (b, a) = (mean(before), mean(after));
    let rel = if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            a.signum()
        }
    } else {
        (a - b) / b.abs()
    };
    let gain = if higher_is_better { rel } else { -rel };
    Ok(if gain > threshold {
        Verdict::Improved
    } else if gain < -threshold {
        Verdict::Degraded
    } else {
        Verdict::Neutral
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(slice: u8) -> ConflictKey {
        ConflictKey {
            node: NodeId::new("du-0"),
            cell: Some(CellId(0)),
            slice: Some(SliceId(slice)),
            parameter: "dedicated_prb".into(),
        }
    }

    #[test]
    fn second_writer_rejected_within_window() {
        let mut t = LockTable::new(1000);
        assert_eq!(t.check("a", &key(0), 0), LockDecision::Pass);
        assert_eq!(
            t.check("b", &key(0), 500),
            LockDecision::ConflictRejected { holder: "a".into() }
        );
        assert_eq!(t.check("a", &key(0), 900), LockDecision::Pass);
        // self re-write did not extend the window
        assert_eq!(t.check("b", &key(0), 1000), LockDecision::Pass);
        assert_eq!(t.check("b", &key(1), 1000), LockDecision::Pass);
    }

    #[test]
    fn verify_cases() {
        assert_eq!(
            verify(&[100.0; 3], &[120.0; 3], true, 0.05),
            Ok(Verdict::Improved)
        );
        assert_eq!(
            verify(&[5.0; 4], &[5.0; 4], true, 0.05),
            Ok(Verdict::Neutral)
        );
        assert_eq!(
            verify(&[10.0; 3], &[20.0; 3], false, 0.05),
            Ok(Verdict::Degraded)
        );
        assert_eq!(
            verify(&[1.0, 2.0], &[1.0; 3], true, 0.05),
            Err(InsufficientData { before: 2, after: 3 })
        );
    }
}
