//! Wire captures taken on the RAN side of every E2 connection.
//!
//! Record layout: u64 time_ms, u8 direction (0 node to RIC, 1 RIC to node),
//! u8 node-name length, node name, u32 payload length, E2AP bytes. All
//! integers big-endian.

use super::HarnessError;
use crate::e2ap::{self, render_debug};
use crate::ids::Millis;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToRic,
    FromRic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptureRecord {
    pub time_ms: Millis,
    pub direction: Direction,
    pub node: String,
    pub payload: Vec<u8>,
}

pub fn append_record(out: &mut Vec<u8>, r: &CaptureRecord) {
    out.extend_from_slice(&r.time_ms.to_be_bytes());
    out.push(match r.direction {
        Direction::ToRic => 0,
        Direction::FromRic => 1,
    });
    let name = &r.node.as_bytes()[..r.node.len().min(255)];
    out.push(name.len() as u8);
    out.extend_from_slice(name);
    out.extend_from_slice(&(r.payload.len() as u32).to_be_bytes());
    out.extend_from_slice(&r.payload);
}

pub fn parse_capture(data: &[u8]) -> Result<Vec<CaptureRecord>, HarnessError> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    let malformed = |offset: usize, reason: &str| HarnessError::MalformedCapture {
        offset,
        reason: reason.to_owned(),
    };
    while pos < data.len() {
        let start = pos;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8], HarnessError> {
            if data.len() - *pos < n {
                return Err(malformed(start, "truncated record"));
            }
            let s = &data[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        let time_ms = u64::from_be_bytes(take(&mut pos, 8)?.try_into().unwrap());
        let direction = match take(&mut pos, 1)?[0] {
            0 => Direction::ToRic,
            1 => Direction::FromRic,
            _ => return Err(malformed(start + 8, "bad direction byte")),
        };
        let nlen = take(&mut pos, 1)?[0] as usize;
        let node = String::from_utf8(take(&mut pos, nlen)?.to_vec())
            .map_err(|_| malformed(start + 10, "node name is not UTF-8"))?;
        let plen = u32::from_be_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let payload = take(&mut pos, plen)?.to_vec();
        out.push(CaptureRecord {
            time_ms,
            direction,
            node,
            payload,
        });
    }
    Ok(out)
}

/// Chronological, human-readable log of a capture.
pub fn inspect(data: &[u8]) -> Result<String, HarnessError> {
    let mut s = String::new();
    let mut offset = 0usize;
    for r in parse_capture(data)? {
        let arrow = match r.direction {
            Direction::ToRic => format!("{} -> ric", r.node),
            Direction::FromRic => format!("ric -> {}", r.node),
        };
        writeln!(s, "# t={}ms {arrow}", r.time_ms).unwrap();
        match e2ap::decode(&r.payload) {
            Ok(pdu) => s.push_str(&render_debug(&pdu)),
            Err(e) => return Err(HarnessError::MalformedCapture {
                offset,
                reason: format!("undecodable PDU: {e}"),
            }),
        }
        offset += 14 + r.node.len() + r.payload.len();
    }
    Ok(s)
}
