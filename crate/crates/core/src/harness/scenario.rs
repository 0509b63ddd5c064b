//! Scenario files: TOML describing the RAN, the xApps to deploy, A1 traffic
//! to inject and the run length.

use super::HarnessError;
use crate::a1::{A1Request, PolicyScope};
use crate::e2ap::TimeToWait;
use crate::ids::{Millis, SliceId};
use crate::ric::xapp::{XApp, XappDescriptor};
use crate::sim::{Sim, SimConfig};
use crate::xapps::{HandoverMode, HandoverXapp, KpmMonitor, PolicyModel, SchedulingXapp, SlicingXapp};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

fn default_warmup() -> Millis {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioRole {
    Train,
    Validate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub duration_ms: Millis,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_warmup")]
    pub warmup_ms: Millis,
    #[serde(default)]
    pub role: Option<ScenarioRole>,
    #[serde(default)]
    pub family: Option<String>,
    /// Published catalog entry the slicing xApp loads.
    #[serde(default)]
    pub model_id: Option<String>,
    pub sim: SimConfig,
    #[serde(default)]
    pub xapps: Vec<XappSpec>,
    #[serde(default)]
    pub policies: Vec<ScheduledPolicy>,
    #[serde(default)]
    pub forecast: Option<ForecastSpec>,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XappKind {
    KpmMonitor,
    Slicing,
    Scheduling,
    Handover,
}

impl XappKind {
    pub fn default_name(self) -> &'static str {
        match self {
            XappKind::KpmMonitor => "kpm-monitor",
            XappKind::Slicing => "slicing",
            XappKind::Scheduling => "scheduling",
            XappKind::Handover => "handover",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XappSpec {
    pub kind: XappKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub priority: i64,
    #[serde(default)]
    pub loop_period_ms: Option<Millis>,
    /// handover only: accept, deny, ignore or margin:<dB>.
    #[serde(default)]
    pub mode: Option<String>,
    /// handover only: insert wait timer, e.g. `w100ms`.
    #[serde(default)]
    pub time_to_wait: Option<String>,
}

impl XappSpec {
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.default_name())
    }

    /// Descriptor and instance. `model_path` feeds a slicing xApp's
    /// file-based model load; `candidate` bypasses the catalog (validation).
    pub(crate) fn build(
        &self,
        model_path: Option<&str>,
        candidate: Option<&PolicyModel>,
    ) -> Result<(XappDescriptor, Box<dyn XApp>), String> {
        let mut desc = match self.kind {
            XappKind::KpmMonitor => {
                let mut d = XappDescriptor::new("kpm-monitor", self.priority);
                d.loop_period_ms = Some(1000);
                d
            }
            XappKind::Slicing => SlicingXapp::descriptor(self.priority),
            XappKind::Scheduling => SchedulingXapp::descriptor(self.priority),
            XappKind::Handover => HandoverXapp::descriptor(self.priority),
        };
        desc.name = self.name().to_owned();
        if let Some(p) = self.loop_period_ms {
            desc.loop_period_ms = Some(p);
        }
        let app: Box<dyn XApp> = match self.kind {
            XappKind::KpmMonitor => Box::new(KpmMonitor::default()),
            XappKind::Slicing => {
                desc.model_path = model_path.map(String::from);
                let x = SlicingXapp::from_descriptor(&desc).map_err(|e| e.to_string())?;
                match candidate {
                    Some(m) => Box::new(x.with_candidate(m.clone())),
                    None => Box::new(x),
                }
            }
            XappKind::Scheduling => Box::new(SchedulingXapp::default()),
            XappKind::Handover => {
                let mode: HandoverMode = self.mode.as_deref().unwrap_or("accept").parse()?;
                let ttw = match &self.time_to_wait {
                    None => TimeToWait::W100ms,
                    Some(s) => TimeToWait::from_name(s).ok_or(format!("unknown time to wait `{s}`"))?,
                };
                Box::new(HandoverXapp::new(mode, ttw))
            }
        };
        Ok((desc, app))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledPolicy {
    pub at_ms: Millis,
    pub request: A1Request,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecastSpec {
    #[serde(default = "default_fc_window")]
    pub window: usize,
    #[serde(default = "default_fc_horizon")]
    pub horizon_ms: Millis,
}

fn default_fc_window() -> usize {
    5
}
fn default_fc_horizon() -> Millis {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduledEvent {
    pub at_ms: Millis,
    pub node: String,
    pub action: EventAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventAction {
    /// Node withdraws a RAN function through a service update.
    RemoveFunction { function_id: u16 },
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl Scenario {
    /// Parses and checks a scenario. `source` names the file in diagnostics.
    pub fn parse(text: &str, source: &str) -> Result<Scenario, HarnessError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            HarnessError::ScenarioInvalid {
                origin: source.to_owned(),
                line,
                field: None,
                message: e.message().to_owned(),
            }
        })?;
        sc.check(source)?;
        Ok(sc)
    }

    pub fn load(path: &std::path::Path) -> Result<Scenario, HarnessError> {
        let src = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::ScenarioInvalid {
            origin: src.clone(),
            line: None,
            field: None,
            message: e.to_string(),
        })?;
        Scenario::parse(&text, &src)
    }

    /// Bundled scenario by name, or a file path.
    pub fn resolve(name_or_path: &str) -> Result<Scenario, HarnessError> {
        match bundled(name_or_path) {
            Some(text) => Scenario::parse(text, name_or_path),
            None => Scenario::load(std::path::Path::new(name_or_path)),
        }
    }

    fn check(&self, source: &str) -> Result<(), HarnessError> {
        let bad = |field: &str, message: String| {
            Err(HarnessError::ScenarioInvalid {
                origin: source.to_owned(),
                line: None,
                field: Some(field.to_owned()),
                message,
            })
        };
        if self.duration_ms <= self.warmup_ms {
            return bad(
                "duration_ms",
                format!("{} must exceed warmup_ms {}", self.duration_ms, self.warmup_ms),
            );
        }
        if let Err(e) = Sim::new(&self.sim, self.seed) {
            return bad("sim", e.to_string());
        }
        let slices: BTreeSet<SliceId> = self
            .sim
            .cells
            .iter()
            .flat_map(|c| c.slices.iter().map(|s| SliceId(s.id)))
            .collect();
        for (i, p) in self.policies.iter().enumerate() {
            let scope = match &p.request {
                A1Request::Create(p) | A1Request::Update(p) => Some(&p.scope),
                _ => None,
            };
            if let Some(PolicyScope::Slice(s)) = scope {
                if !slices.contains(&SliceId(*s)) {
                    return bad(&format!("policies[{i}].request.scope"), format!("no slice {s}"));
                }
            }
            if p.at_ms > self.duration_ms {
                return bad(&format!("policies[{i}].at_ms"), "after the end of the run".into());
            }
        }
        let mut names = BTreeSet::new();
        for (i, x) in self.xapps.iter().enumerate() {
            if !names.insert(x.name().to_owned()) {
                return bad(&format!("xapps[{i}].name"), format!("duplicate `{}`", x.name()));
            }
            if let Err(e) = x.model_free_check() {
                return bad(&format!("xapps[{i}]"), e);
            }
        }
        for (i, e) in self.events.iter().enumerate() {
            if !self.sim.nodes.iter().any(|n| n.id == e.node) {
                return bad(&format!("events[{i}].node"), format!("no node `{}`", e.node));
            }
        }
        if self.model_id.is_some() && !self.xapps.iter().any(|x| x.kind == XappKind::Slicing) {
            return bad("model_id", "no slicing xApp to load the model".into());
        }
        Ok(())
    }
}

impl XappSpec {
    fn model_free_check(&self) -> Result<(), String> {
        if self.kind == XappKind::Handover {
            self.mode.as_deref().unwrap_or("accept").parse::<HandoverMode>()?;
            if let Some(s) = &self.time_to_wait {
                TimeToWait::from_name(s).ok_or(format!("unknown time to wait `{s}`"))?;
            }
        } else if self.mode.is_some() || self.time_to_wait.is_some() {
            return Err("mode/time_to_wait only apply to the handover xApp".into());
        }
        Ok(())
    }
}

/// Scenarios shipped with the binary.
pub const BUNDLED: &[(&str, &str)] = &[
    ("slicing-baseline", include_str!("../../scenarios/slicing-baseline.toml")),
    ("slicing-overload", include_str!("../../scenarios/slicing-overload.toml")),
    ("mobility", include_str!("../../scenarios/mobility.toml")),
    ("chained", include_str!("../../scenarios/chained.toml")),
    ("a1-objectives", include_str!("../../scenarios/a1-objectives.toml")),
    ("o1-faults", include_str!("../../scenarios/o1-faults.toml")),
    ("train-low", include_str!("../../scenarios/train-low.toml")),
    ("train-mid", include_str!("../../scenarios/train-mid.toml")),
    ("train-high", include_str!("../../scenarios/train-high.toml")),
    ("validate-a", include_str!("../../scenarios/validate-a.toml")),
    ("validate-b", include_str!("../../scenarios/validate-b.toml")),
    ("regime-shift", include_str!("../../scenarios/regime-shift.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
