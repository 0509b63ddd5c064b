//! Tabular slicing policy: quantized demand vector to PRB split.
//!
//! File format (`model.tbl`), one `key: value` header per line, then the
//! table:
//!
//! ```text
//! model_id: m-3f2a...
//! capacity: 50
//! step: 5
//! slices: 0,1,2
//! objectives: 0:urllc:10:0;1:embb:5000000:1;2:mmtc:20:2
//! dataset_hash: 9c1d...
//! scenarios: train-a,train-b
//! validation: 1 val-a,val-b
//! table:
//! 40 30 10 -> 40 10 0
//! ```
//!
//! `validation:` is absent on a model that has not passed validation.

use super::SlicingObjectives;
use crate::ids::SliceId;
use std::collections::BTreeMap;
use std::fmt::Write;
use thiserror::Error;

/// Minimum pass rate for a model to be loaded by an xApp.
pub const MIN_PASS_RATE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("model file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("model `{0}` has no validation record")]
    NotValidated(String),
    #[error("model `{model}` pass rate {pass_rate} below {min}")]
    BelowThreshold {
        model: String,
        pass_rate: String,
        min: f64,
    },
    #[error("reading model file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub pass_rate: f64,
    pub scenarios: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    pub model_id: String,
    pub capacity: u32,
    pub step: u32,
    pub slices: Vec<SliceId>,
    /// Fingerprint of the objectives the table was optimized for.
    pub objectives: String,
    pub dataset_hash: String,
    pub scenarios: Vec<String>,
    pub table: BTreeMap<Vec<u32>, Vec<u32>>,
    pub validation: Option<ValidationRecord>,
}

impl PolicyModel {
    /// Grid cell of a demand vector: each entry rounded up to the step and
    /// clipped to capacity.
    pub fn quantize(&self, demand: &[u32]) -> Vec<u32> {
        quantize(demand, self.step, self.capacity)
    }

    pub fn lookup(&self, demand: &[u32]) -> Option<Vec<u32>> {
        self.table.get(&self.quantize(demand)).cloned()
    }

    pub fn applies_to(&self, slices: &[SliceId], capacity: u32, obj: &SlicingObjectives) -> bool {
        self.slices == slices && self.capacity == capacity && self.objectives == obj.fingerprint()
    }

    /// Refuses models that did not pass validation.
    pub fn check_deployable(&self) -> Result<(), ModelError> {
        match &self.validation {
            None => Err(ModelError::NotValidated(self.model_id.clone())),
            Some(v) if v.pass_rate < MIN_PASS_RATE => Err(ModelError::BelowThreshold {
                model: self.model_id.clone(),
                pass_rate: v.pass_rate.to_string(),
                min: MIN_PASS_RATE,
            }),
            Some(_) => Ok(()),
        }
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[u32]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        writeln!(s, "model_id: {}", self.model_id).unwrap();
        writeln!(s, "capacity: {}", self.capacity).unwrap();
        writeln!(s, "step: {}", self.step).unwrap();
        let slices: Vec<String> = self.slices.iter().map(|x| x.0.to_string()).collect();
        writeln!(s, "slices: {}", slices.join(",")).unwrap();
        writeln!(s, "objectives: {}", self.objectives).unwrap();
        writeln!(s, "dataset_hash: {}", self.dataset_hash).unwrap();
        writeln!(s, "scenarios: {}", self.scenarios.join(",")).unwrap();
        if let Some(v) = &self.validation {
            writeln!(s, "validation: {} {}", v.pass_rate, v.scenarios.join(",")).unwrap();
        }
        s.push_str("table:\n");
        for (k, v) in &self.table {
            writeln!(s, "{} -> {}", join(k), join(v)).unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let err = |line: usize, reason: String| ModelError::Parse { line, reason };
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut lines = text.lines().enumerate();
        for (i, line) in lines.by_ref() {
            if line.trim() == "table:" {
                break;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| err(i + 1, "expected `key: value`".into()))?;
            header.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            header
                .get(k)
                .copied()
                .ok_or_else(|| err(0, format!("missing `{k}`")))
        };
        let num = |k: &str| -> Result<u32, ModelError> {
            get(k)?
                .parse()
                .map_err(|_| err(0, format!("`{k}` is not an integer")))
        };
        let list = |v: &str| -> Vec<String> {
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect()
        };
        let slices = list(get("slices")?)
            .iter()
            .map(|s| s.parse::<u8>().map(SliceId))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| err(0, "bad slice list".into()))?;
        let validation = match header.get("validation") {
            None => None,
            Some(v) => {
                let (rate, sc) = v.split_once(' ').unwrap_or((v, ""));
                Some(ValidationRecord {
                    pass_rate: rate
                        .parse()
                        .map_err(|_| err(0, "bad pass rate".into()))?,
                    scenarios: list(sc),
                })
            }
        };
        let mut table = BTreeMap::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once("->")
                .ok_or_else(|| err(i + 1, "expected `demand -> split`".into()))?;
            let nums = |s: &str| -> Result<Vec<u32>, ModelError> {
                s.split_whitespace()
                    .map(|x| x.parse().map_err(|_| err(i + 1, format!("bad number `{x}`"))))
                    .collect()
            };
            let (k, v) = (nums(k)?, nums(v)?);
            if k.len() != slices.len() || v.len() != slices.len() {
                return Err(err(i + 1, "entry width differs from slice count".into()));
            }
            table.insert(k, v);
        }
        let m = PolicyModel {
            model_id: get("model_id")?.to_owned(),
            capacity: num("capacity")?,
            step: num("step")?,
            slices,
            objectives: get("objectives")?.to_owned(),
            dataset_hash: get("dataset_hash")?.to_owned(),
            scenarios: list(get("scenarios")?),
            table,
            validation,
        };
        if m.step == 0 {
            return Err(err(0, "step must be positive".into()));
        }
        if let Some((k, _)) = m
            .table
            .iter()
            .find(|(_, v)| v.iter().sum::<u32>() > m.capacity)
        {
            return Err(err(0, format!("split for {k:?} exceeds capacity")));
        }
        Ok(m)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

pub fn quantize(demand: &[u32], step: u32, capacity: u32) -> Vec<u32> {
    demand
        .iter()
        .map(|d| (d.div_ceil(step) * step).min(capacity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PolicyModel {
        PolicyModel {
            model_id: "m1".into(),
            capacity: 50,
            step: 5,
            slices: vec![SliceId(0), SliceId(1), SliceId(2)],
            objectives: "x".into(),
            dataset_hash: "abc".into(),
            scenarios: vec!["a".into(), "b".into()],
            table: [(vec![40, 30, 10], vec![40, 10, 0])].into_iter().collect(),
            validation: None,
        }
    }

    #[test]
    fn text_roundtrip_and_gate() {
        let mut m = sample();
        assert_eq!(PolicyModel::parse(&m.to_text()).unwrap(), m);
        assert!(matches!(m.check_deployable(), Err(ModelError::NotValidated(_))));
        m.validation = Some(ValidationRecord {
            pass_rate: 1.0,
            scenarios: vec!["v".into()],
        });
        assert_eq!(PolicyModel::parse(&m.to_text()).unwrap(), m);
        m.check_deployable().unwrap();
    }

    #[test]
    fn quantization_rounds_up_and_clips() {
        let m = sample();
        assert_eq!(m.quantize(&[38, 26, 7]), vec![40, 30, 10]);
        assert_eq!(m.quantize(&[0, 51, 5]), vec![0, 50, 5]);
        assert_eq!(m.lookup(&[36, 29, 6]), Some(vec![40, 10, 0]));
    }

    #[test]
    fn over_capacity_split_rejected() {
        let text = sample().to_text().replace("-> 40 10 0", "-> 40 20 0");
        assert!(PolicyModel::parse(&text).is_err());
    }
}
