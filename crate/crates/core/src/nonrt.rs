//! Non-RT RIC / SMO side: A1 policy store and enrichment-information
//! registry, the forecasting rApp, and O1 heartbeat and bulk PM collection.

use crate::a1::{validate_policy, A1Policy, A1Reply, A1Request, EnrichmentMessage, SchemaError};
use crate::ids::{Millis, NodeId, SliceId};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum A1Error {
    #[error("policy `{0}` already exists")]
    DuplicateId(String),
    #[error("no policy `{0}`")]
    UnknownId(String),
    #[error(transparent)]
    SchemaViolation(#[from] SchemaError),
    #[error("EI topic `{0}` is not registered")]
    UnknownTopic(String),
    #[error("stale epoch {got} on `{topic}` (last {last})")]
    StaleEpoch { topic: String, got: u64, last: u64 },
}

/// Feedback received from the near-RT RIC, kept in arrival order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackEvent {
    pub policy_id: String,
    pub enforced: bool,
    pub at_ms: Millis,
}

/// Policies as known to the non-RT RIC. Each accepted operation yields the
/// A1 request to forward.
#[derive(Debug, Default)]
pub struct PolicyStore {
    policies: BTreeMap<String, A1Policy>,
    feedback: Vec<FeedbackEvent>,
    errors: Vec<(String, String)>,
}

impl PolicyStore {
    pub fn create(&mut self, p: A1Policy) -> Result<A1Request, A1Error> {
        if self.policies.contains_key(&p.policy_id) {
            return Err(A1Error::DuplicateId(p.policy_id));
        }
        validate_policy(&p)?;
        self.policies.insert(p.policy_id.clone(), p.clone());
        Ok(A1Request::Create(p))
    }

    pub fn update(&mut self, p: A1Policy) -> Result<A1Request, A1Error> {
        if !self.policies.contains_key(&p.policy_id) {
            return Err(A1Error::UnknownId(p.policy_id));
        }
        validate_policy(&p)?;
        self.policies.insert(p.policy_id.clone(), p.clone());
        Ok(A1Request::Update(p))
    }

    pub fn delete(&mut self, id: &str) -> Result<A1Request, A1Error> {
        self.policies
            .remove(id)
            .ok_or_else(|| A1Error::UnknownId(id.into()))?;
        Ok(A1Request::Delete {
            policy_id: id.into(),
        })
    }

    pub fn query(&self, id: Option<&str>) -> Result<Vec<&A1Policy>, A1Error> {
        match id {
            None => Ok(self.policies.values().collect()),
            Some(id) => self
                .policies
                .get(id)
                .map(|p| vec![p])
                .ok_or_else(|| A1Error::UnknownId(id.into())),
        }
    }

    /// Applies any request, as the `policies` CLI verb does.
    pub fn apply(&mut self, req: A1Request) -> Result<Option<A1Request>, A1Error> {
        match req {
            A1Request::Create(p) => self.create(p).map(Some),
            A1Request::Update(p) => self.update(p).map(Some),
            A1Request::Delete { policy_id } => self.delete(&policy_id).map(Some),
            A1Request::Query { policy_id } => self.query(policy_id.as_deref()).map(|_| None),
            A1Request::Ei(_) => Ok(Some(req)),
        }
    }

    pub fn on_reply(&mut self, r: A1Reply) {
        match r {
            A1Reply::Feedback {
                policy_id,
                enforced,
                at_ms,
            } => self.feedback.push(FeedbackEvent {
                policy_id,
                enforced,
                at_ms,
            }),
            A1Reply::Error { policy_id, error } => self.errors.push((policy_id, error)),
        }
    }

    pub fn feedback(&self) -> &[FeedbackEvent] {
        &self.feedback
    }

    pub fn errors(&self) -> &[(String, String)] {
        &self.errors
    }

    /// Latest enforcement state reported for a policy.
    pub fn enforced(&self, id: &str) -> Option<bool> {
        self.feedback
            .iter()
            .rev()
            .find(|f| f.policy_id == id)
            .map(|f| f.enforced)
    }
}

/// Registered EI topics with the last epoch seen per (topic, producer).
#[derive(Debug, Default)]
pub struct EiRegistry {
    topics: BTreeMap<String, BTreeMap<String, u64>>,
}

impl EiRegistry {
    pub fn register(&mut self, topic: &str) {
        self.topics.entry(topic.to_owned()).or_default();
    }

    pub fn publish(&mut self, m: EnrichmentMessage) -> Result<A1Request, A1Error> {
        let producers = self
            .topics
            .get_mut(&m.topic)
            .ok_or_else(|| A1Error::UnknownTopic(m.topic.clone()))?;
        if let Some(&last) = producers.get(&m.producer) {
            if m.epoch <= last {
                return Err(A1Error::StaleEpoch {
                    topic: m.topic,
                    got: m.epoch,
                    last,
                });
            }
        }
        producers.insert(m.producer.clone(), m.epoch);
        Ok(A1Request::Ei(m))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub demand_prb: BTreeMap<SliceId, f64>,
    pub low_confidence: bool,
}

/// rApp that forecasts per-slice PRB demand as the mean of the last W
/// interval samples taken from PM files.
#[derive(Debug)]
pub struct ForecastRapp {
    pub window: usize,
    pub horizon_ms: Millis,
    samples: BTreeMap<SliceId, VecDeque<f64>>,
    epoch: u64,
}

pub const FORECAST_TOPIC: &str = "forecast";
pub const FORECAST_PRODUCER: &str = "rapp-forecast";

impl ForecastRapp {
    pub fn new(window: usize, horizon_ms: Millis) -> Self {
        Self {
            window: window.max(1),
            horizon_ms,
            samples: BTreeMap::new(),
            epoch: 0,
        }
    }

    pub fn push_sample(&mut self, slice: SliceId, prb: f64) {
        let q = self.samples.entry(slice).or_default();
        q.push_back(prb);
        while q.len() > self.window {
            q.pop_front();
        }
    }

    /// Adds the `prb_requested` rows of one PM file; slices on several
    /// cells are summed.
    pub fn ingest_pm(&mut self, csv: &str) {
        let mut per_slice: BTreeMap<SliceId, f64> = BTreeMap::new();
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 || f[4] != "prb_requested" {
                continue;
            }
            if let (Ok(s), Ok(v)) = (f[3].parse::<u8>(), f[5].parse::<f64>()) {
                *per_slice.entry(SliceId(s)).or_default() += v;
            }
        }
        for (s, v) in per_slice {
            self.push_sample(s, v);
        }
    }

    pub fn forecast(&self) -> Forecast {
        let demand_prb: BTreeMap<SliceId, f64> = self
            .samples
            .iter()
            .filter(|(_, q)| !q.is_empty())
            .map(|(s, q)| (*s, q.iter().sum::<f64>() / q.len() as f64))
            .collect();
        Forecast {
            low_confidence: demand_prb.is_empty(),
            demand_prb,
        }
    }

    /// Next EI message when one is due at `now`.
    pub fn emit(&mut self, now: Millis) -> Option<EnrichmentMessage> {
        if self.horizon_ms == 0 || now == 0 || !now.is_multiple_of(self.horizon_ms) {
            return None;
        }
        self.epoch += 1;
        let f = self.forecast();
        let demand: Map<String, Value> = f
            .demand_prb
            .iter()
            .map(|(s, v)| (s.to_string(), json!(v)))
            .collect();
        Some(EnrichmentMessage {
            topic: FORECAST_TOPIC.into(),
            producer: FORECAST_PRODUCER.into(),
            epoch: self.epoch,
            payload: json!({
                "demand_prb": demand,
                "low_confidence": f.low_confidence,
                "horizon_ms": self.horizon_ms,
            }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    Available,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeartbeatRecord {
    pub node: NodeId,
    pub period_ms: Millis,
    pub last_beat: Millis,
    pub state: Availability,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub node: NodeId,
    pub state: Availability,
    pub at: Millis,
}

/// O1 heartbeat supervision: a node is unavailable iff more than three
/// periods have passed since its last beat.
#[derive(Debug, Default)]
pub struct HeartbeatMonitor {
    nodes: BTreeMap<NodeId, HeartbeatRecord>,
    log: Vec<Transition>,
}

impl HeartbeatMonitor {
    pub fn register(&mut self, node: &NodeId, period_ms: Millis, now: Millis) {
        self.nodes.insert(
            node.clone(),
            HeartbeatRecord {
                node: node.clone(),
                period_ms,
                last_beat: now,
                state: Availability::Available,
            },
        );
    }

    pub fn beat(&mut self, node: &NodeId, now: Millis) {
        let Some(r) = self.nodes.get_mut(node) else {
            return;
        };
        r.last_beat = now;
        if r.state == Availability::Unavailable {
            r.state = Availability::Available;
            self.log.push(Transition {
                node: node.clone(),
                state: Availability::Available,
                at: now,
            });
        }
    }

    /// Evaluates every node at `now`; call once per tick.
    pub fn poll(&mut self, now: Millis) -> Vec<Transition> {
        let mut out = Vec::new();
        for r in self.nodes.values_mut() {
            if r.state == Availability::Available && now - r.last_beat.min(now) > 3 * r.period_ms {
                r.state = Availability::Unavailable;
                out.push(Transition {
                    node: r.node.clone(),
                    state: Availability::Unavailable,
                    at: now,
                });
            }
        }
        self.log.extend(out.iter().cloned());
        out
    }

    pub fn state(&self, node: &NodeId) -> Option<Availability> {
        self.nodes.get(node).map(|r| r.state)
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.log
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum O1Error {
    #[error("file-ready notification for {node} interval {interval} but no file")]
    MissingFile { node: NodeId, interval: u64 },
}

/// File-ready notification sent by a node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReady {
    pub node: NodeId,
    pub interval: u64,
}

/// SMO data store for bulk PM files, keyed by (node, interval).
#[derive(Debug, Default)]
pub struct PmCollector {
    files: BTreeMap<(NodeId, u64), String>,
}

impl PmCollector {
    /// Fetches the announced file from `server`. Returns whether it was new.
    pub fn on_file_ready(
        &mut self,
        note: &FileReady,
        server: &BTreeMap<(NodeId, u64), String>,
    ) -> Result<bool, O1Error> {
        let key = (note.node.clone(), note.interval);
        if self.files.contains_key(&key) {
            return Ok(false);
        }
        let blob = server.get(&key).ok_or_else(|| O1Error::MissingFile {
            node: note.node.clone(),
            interval: note.interval,
        })?;
        self.files.insert(key, blob.clone());
        Ok(true)
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn files(&self) -> impl Iterator<Item = (&(NodeId, u64), &String)> {
        self.files.iter()
    }
}
