//! Orchestration: loads a scenario, wires the simulated RAN, the non-RT
//! RIC and the near-RT RIC together in simulated-time lockstep, and reports.

pub mod capture;
mod lockstep;
pub mod scenario;

pub use capture::{inspect, parse_capture, CaptureRecord, Direction};
pub use lockstep::{Acceptor, QuotaSample, RicServer, RicSummary, SliceTally};
pub use scenario::{
    bundled, EventAction, ForecastSpec, Scenario, ScenarioRole, ScheduledEvent, ScheduledPolicy,
    XappKind, XappSpec, BUNDLED,
};

use crate::ids::Millis;
use crate::mlops::{Catalog, RetrainMonitor, RetrainRequested};
use crate::nonrt::{Availability, FeedbackEvent};
use crate::ric::RicStats;
use crate::transport::{Connection, LoopbackNetwork, TcpConnection, TcpFrameListener};
use crate::xapps::PolicyModel;
use lockstep::RanSide;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("scenario {origin}{}{}: {message}",
        line.map(|l| format!(" line {l}")).unwrap_or_default(),
        field.as_ref().map(|f| format!(" field `{f}`")).unwrap_or_default())]
    ScenarioInvalid {
        origin: String,
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },
    #[error("transport: {0}")]
    Transport(String),
    #[error("lockstep protocol: {0}")]
    Protocol(String),
    #[error("ric: {0}")]
    Ric(String),
    #[error("malformed capture at byte {offset}: {reason}")]
    MalformedCapture { offset: usize, reason: String },
    #[error("i/o: {0}")]
    Io(String),
}

/// Where the near-RT RIC runs relative to the RAN side.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum TransportMode {
    /// Same thread, in-process queues.
    #[default]
    Loopback,
    /// Real sockets on 127.0.0.1, RIC on its own thread.
    TcpThread,
    /// Real sockets, RIC in a child process running `<exe> ric-serve`.
    TcpProcess(PathBuf),
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub transport: TransportMode,
    /// Keep a wire capture in the report.
    pub capture: bool,
    /// Catalog root used to resolve `model_id`; defaults to `./catalog`.
    pub catalog: Option<PathBuf>,
    /// Record per-tick quotas.
    pub trace: bool,
    pub(crate) candidate: Option<PolicyModel>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertCounts {
    pub received: u64,
    pub accepted: u64,
    pub denied: u64,
    pub timed_out: u64,
    /// Arrived with no subscribed handler; the node's own timer resolves them.
    pub unrouted: u64,
    /// Still awaiting a decision when the run ended.
    pub pending: u64,
}

impl InsertCounts {
    pub fn balanced(&self) -> bool {
        self.received == self.accepted + self.denied + self.timed_out + self.unrouted + self.pending
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlCounts {
    pub sent: u64,
    pub acked: u64,
    pub failed: u64,
    pub timed_out: u64,
    /// Unanswered when the run ended.
    pub pending: u64,
}

impl ControlCounts {
    pub fn balanced(&self) -> bool {
        self.sent == self.acked + self.failed + self.timed_out + self.pending
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceReport {
    pub cell: u32,
    pub slice: u8,
    pub kind: String,
    pub windows: u64,
    pub violations: u64,
    pub satisfaction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeartbeatEvent {
    pub node: String,
    pub available: bool,
    pub at_ms: Millis,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub duration_ms: Millis,
    pub state_hash: String,
    pub slices: Vec<SliceReport>,
    /// Evaluation windows after warmup, and how many missed any objective.
    pub windows: u64,
    pub violated_windows: u64,
    pub inserts: InsertCounts,
    pub controls: ControlCounts,
    pub conflicts_rejected: u64,
    pub wire_to_ric: BTreeMap<String, u64>,
    pub wire_from_ric: BTreeMap<String, u64>,
    pub wire_subscriptions: u64,
    pub subscription_keys: u64,
    pub a1_feedback: Vec<FeedbackEvent>,
    pub heartbeat: Vec<HeartbeatEvent>,
    pub pm_files: u64,
    pub retrain_events: Vec<RetrainRequested>,
    pub xapps: BTreeMap<String, Value>,
    pub ric_stats: RicStats,
    /// CSV artifacts by relative file name.
    pub files: BTreeMap<String, String>,
    #[serde(skip)]
    pub quota_trace: Vec<QuotaSample>,
    #[serde(skip)]
    pub capture: Vec<u8>,
}

impl RunReport {
    pub fn violation_rate(&self) -> f64 {
        if self.windows == 0 {
            0.0
        } else {
            self.violated_windows as f64 / self.windows as f64
        }
    }

    /// Writes every CSV artifact under `dir` and returns the paths written.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io(e.to_string());
        let mut out = Vec::new();
        for (name, body) in &self.files {
            let p = dir.join(name);
            if let Some(parent) = p.parent() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&p, body).map_err(io)?;
            out.push(p);
        }
        Ok(out)
    }
}

fn resolve_model(sc: &Scenario, opts: &RunOptions) -> Result<Option<String>, HarnessError> {
    let Some(id) = &sc.model_id else {
        return Ok(None);
    };
    let root = opts.catalog.clone().unwrap_or_else(|| PathBuf::from("catalog"));
    let path = Catalog::new(root)
        .deployable_path(id)
        .map_err(|e| HarnessError::ScenarioInvalid {
            origin: sc.name.clone(),
            line: None,
            field: Some("model_id".into()),
            message: e.to_string(),
        })?;
    let abs = std::fs::canonicalize(&path).unwrap_or(path);
    Ok(Some(abs.display().to_string()))
}

/// Runs a scenario to completion in simulated time.
pub fn run(sc: &Scenario, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let mut sc = sc.clone();
    if let Some(s) = opts.seed {
        sc.seed = s;
    }
    let model_path = resolve_model(&sc, opts)?;
    if opts.candidate.is_some() && opts.transport != TransportMode::Loopback {
        return Err(HarnessError::Protocol("candidate models run in-process only".into()));
    }
    let (ran, summary) = match &opts.transport {
        TransportMode::Loopback => {
            let net = LoopbackNetwork::new();
            let mut listener = net.listen("ric");
            let mut connect = || -> Result<Box<dyn Connection>, HarnessError> {
                net.connect("ric")
                    .map(|c| Box::new(c) as Box<dyn Connection>)
                    .map_err(|e| HarnessError::Transport(e.to_string()))
            };
            let mut ran = RanSide::open(sc, model_path, opts.capture, opts.trace, &mut connect)?;
            let mut server = RicServer::accept_with(&mut listener, opts.candidate.as_ref())?;
            let summary = ran.run(&mut || server.step().map(|_| ()))?;
            (ran, summary)
        }
        TransportMode::TcpThread => {
            let mut listener =
                TcpFrameListener::bind("127.0.0.1:0").map_err(|e| HarnessError::Io(e.to_string()))?;
            let addr = listener.local_addr().map_err(|e| HarnessError::Io(e.to_string()))?;
            let handle = std::thread::spawn(move || RicServer::accept(&mut listener)?.serve());
            let result = tcp_ran(sc, model_path, opts, &addr);
            let served = handle
                .join()
                .map_err(|_| HarnessError::Ric("RIC thread panicked".into()))?;
            let r = result?;
            served?;
            r
        }
        TransportMode::TcpProcess(exe) => {
            let mut child = std::process::Command::new(exe)
                .args(["ric-serve", "--listen", "127.0.0.1:0"])
                .stdout(std::process::Stdio::piped())
                .spawn()
                .map_err(|e| HarnessError::Io(format!("spawning {}: {e}", exe.display())))?;
            let mut line = String::new();
            let stdout = child.stdout.take().expect("piped");
            BufReader::new(stdout)
                .read_line(&mut line)
                .map_err(|e| HarnessError::Io(e.to_string()))?;
            let addr = line
                .trim()
                .strip_prefix("listening ")
                .ok_or_else(|| HarnessError::Protocol(format!("unexpected RIC banner `{}`", line.trim())))?
                .to_owned();
            let result = tcp_ran(sc, model_path, opts, &addr);
            let status = child.wait().map_err(|e| HarnessError::Io(e.to_string()))?;
            let r = result?;
            if !status.success() {
                return Err(HarnessError::Ric(format!("RIC process exited with {status}")));
            }
            r
        }
    };
    Ok(assemble(ran, summary))
}

fn tcp_ran(
    sc: Scenario,
    model_path: Option<String>,
    opts: &RunOptions,
    addr: &str,
) -> Result<(RanSide, RicSummary), HarnessError> {
    let mut connect = || -> Result<Box<dyn Connection>, HarnessError> {
        TcpConnection::connect(addr)
            .map(|c| Box::new(c) as Box<dyn Connection>)
            .map_err(|e| HarnessError::Transport(e.to_string()))
    };
    let mut ran = RanSide::open(sc, model_path, opts.capture, opts.trace, &mut connect)?;
    let summary = ran.run(&mut || Ok(()))?;
    Ok((ran, summary))
}

/// Serves one run on `listener` (the `ric-serve` subcommand).
pub fn serve_tcp(listener: TcpFrameListener) -> Result<(), HarnessError> {
    let mut l = listener;
    RicServer::accept(&mut l)?.serve()
}

fn assemble(ran: RanSide, mut summary: RicSummary) -> RunReport {
    let st = summary.stats.clone();
    let mut files = BTreeMap::new();
    for (name, body) in std::mem::take(&mut summary.sinks) {
        files.insert(name, body);
    }
    for ((node, interval), csv) in ran.pm_files() {
        files.insert(format!("pm/{node}-{interval:04}.csv"), csv.clone());
    }
    files.insert("objectives.csv".into(), ran.eval.csv.clone());
    files.insert("ric-metrics.csv".into(), summary.metrics_csv.clone());
    let slices = ran
        .eval
        .tallies
        .values()
        .map(|t| SliceReport {
            cell: t.cell,
            slice: t.slice,
            kind: t.kind.map(|k| k.as_str().to_owned()).unwrap_or_default(),
            windows: t.windows,
            violations: t.violations,
            satisfaction: if t.windows == 0 {
                1.0
            } else {
                1.0 - t.violations as f64 / t.windows as f64
            },
        })
        .collect();
    let deployed_model = ran.sc.model_id.is_some()
        || summary
            .xapps
            .values()
            .any(|v| v.get("model_id").is_some_and(|m| !m.is_null()));
    let mut retrain_events = Vec::new();
    if deployed_model {
        let mut mon = RetrainMonitor::new(&ran.sc.name);
        for &(t, v) in &ran.window_log {
            retrain_events.extend(mon.observe(t, v));
        }
    }
    RunReport {
        scenario: ran.sc.name.clone(),
        seed: ran.sc.seed,
        duration_ms: ran.sc.duration_ms,
        state_hash: ran.sim.state_hash(),
        slices,
        windows: ran.eval.windows,
        violated_windows: ran.eval.violated,
        inserts: InsertCounts {
            received: st.inserts_received,
            accepted: st.inserts_accepted,
            denied: st.inserts_denied,
            timed_out: st.inserts_timed_out,
            unrouted: st.inserts_unrouted,
            pending: summary.pending_inserts,
        },
        controls: ControlCounts {
            sent: st.controls_sent,
            acked: st.controls_acked,
            failed: st.controls_failed,
            timed_out: st.controls_timed_out,
            pending: summary.pending_controls,
        },
        conflicts_rejected: st.conflicts_rejected,
        wire_to_ric: ran.wire_to_ric.clone(),
        wire_from_ric: ran.wire_from_ric.clone(),
        wire_subscriptions: st.wire_subscriptions,
        subscription_keys: summary.subscription_keys,
        a1_feedback: ran.store.feedback().to_vec(),
        heartbeat: ran
            .hb
            .transitions()
            .iter()
            .map(|t| HeartbeatEvent {
                node: t.node.to_string(),
                available: t.state == Availability::Available,
                at_ms: t.at,
            })
            .collect(),
        pm_files: ran.pm.len() as u64,
        retrain_events,
        xapps: summary.xapps,
        ric_stats: st,
        files,
        quota_trace: ran.trace.clone().unwrap_or_default(),
        capture: ran.capture.clone().unwrap_or_default(),
    }
}
