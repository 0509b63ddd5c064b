//! Model workflow for the slicing policy: collect run outputs into a
//! dataset, normalize, train a demand-to-split table by exhaustive search,
//! validate it in closed loop, publish to the catalog, deploy, and watch the
//! live violation rate for retraining.

pub mod catalog;

pub use catalog::{Catalog, CatalogEntry, CatalogError, Manifest, ModelState};

use crate::harness::{self, HarnessError, RunOptions, RunReport, Scenario, ScenarioRole};
use crate::ids::{Millis, SliceId, SliceKind};
use crate::sim::agent::CSV_HEADER;
use crate::xapps::{quantize, PolicyModel, SlicingObjectives, ValidationRecord};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::Path;
use thiserror::Error;

/// Share of post-warmup evaluation windows a validation run may violate.
pub const VIOLATION_BUDGET: f64 = 0.05;
pub const RETRAIN_WINDOW_MS: Millis = 5000;
pub const RETRAIN_THRESHOLD: f64 = 0.10;
/// Demand column trained on.
pub const DEMAND_COLUMN: &str = "prb_requested";

#[derive(Debug, Error)]
pub enum MlopsError {
    #[error("no input runs")]
    EmptyInput,
    #[error("{file} line {line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file} line {line}: negative demand")]
    NegativeDemand { file: String, line: usize },
    #[error("grid of {cells} cells exceeds the cap of {max}; raise the quantization step")]
    GridTooLarge { cells: u64, max: u64 },
    #[error("validation needs at least one scenario")]
    EmptyScenarioList,
    #[error("model `{model_id}` failed validation with pass rate {pass_rate}")]
    ValidationFailed { model_id: String, pass_rate: f64 },
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

// ---------------------------------------------------------------------------
// Collection

/// Files produced by one run, keyed by relative name (`kpm-monitor.csv`,
/// `pm/<node>-<interval>.csv`).
#[derive(Debug, Clone, PartialEq)]
pub struct RunArtifacts {
    pub scenario: String,
    pub files: BTreeMap<String, String>,
}

impl RunArtifacts {
    pub fn from_report(r: &RunReport) -> Self {
        Self {
            scenario: r.scenario.clone(),
            files: r.files.clone(),
        }
    }

    /// Reads the CSVs under `dir` as written by [`RunReport::write_files`].
    pub fn load_dir(scenario: &str, dir: &Path) -> Result<Self, MlopsError> {
        let mut files = BTreeMap::new();
        let io = |p: &Path, e: std::io::Error| MlopsError::Parse {
            file: p.display().to_string(),
            line: 0,
            reason: e.to_string(),
        };
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for ent in std::fs::read_dir(&d).map_err(|e| io(&d, e))? {
                let p = ent.map_err(|e| io(&d, e))?.path();
                if p.is_dir() {
                    stack.push(p);
                } else if p.extension().is_some_and(|x| x == "csv") {
                    let rel = p.strip_prefix(dir).unwrap_or(&p).to_string_lossy().replace('\\', "/");
                    files.insert(rel, std::fs::read_to_string(&p).map_err(|e| io(&p, e))?);
                }
            }
        }
        Ok(Self {
            scenario: scenario.to_owned(),
            files,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRow {
    pub scenario: String,
    pub time_ms: Millis,
    pub node: String,
    pub cell: u32,
    pub slice: u8,
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// KPM metrics by name; PM file metrics as `pm.<name>`.
    pub columns: Vec<String>,
    pub rows: Vec<DataRow>,
    /// Per-column (min, max) once prepared.
    pub norm: Option<Vec<(f64, f64)>>,
    /// SHA-256 over the sorted raw rows.
    pub hash: String,
}

type RowKey = (String, Millis, String, u32, u8);

fn parse_csv(
    file: &str,
    text: &str,
    prefix: &str,
    window: Option<(Millis, Millis)>,
    out: &mut BTreeMap<RowKey, BTreeMap<String, f64>>,
) -> Result<(), MlopsError> {
    let bad = |line: usize, reason: String| MlopsError::Parse {
        file: file.to_owned(),
        line,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((_, h)) => return Err(bad(1, format!("unexpected header `{h}`"))),
        None => return Ok(()),
    }
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i + 1, format!("expected 6 fields, got {}", f.len())));
        }
        let num = |s: &str, what: &str| -> Result<f64, MlopsError> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(i + 1, format!("bad {what} `{s}`")))
        };
        let t = num(f[0], "time")? as Millis;
        if f[2].is_empty() || f[3].is_empty() {
            continue; // UE-scoped rows
        }
        let cell: u32 = f[2].parse().map_err(|_| bad(i + 1, format!("bad cell `{}`", f[2])))?;
        let slice: u8 = f[3].parse().map_err(|_| bad(i + 1, format!("bad slice `{}`", f[3])))?;
        let v = num(f[5], "value")?;
        if f[4] == DEMAND_COLUMN && v < 0.0 {
            return Err(MlopsError::NegativeDemand {
                file: file.to_owned(),
                line: i + 1,
            });
        }
        if window.is_some_and(|(a, b)| t < a || t > b) {
            continue;
        }
        out.entry((String::new(), t, f[1].to_owned(), cell, slice))
            .or_default()
            .insert(format!("{prefix}{}", f[4]), v);
    }
    Ok(())
}

/// Slice of a run's data named by a retrain event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataRef {
    pub scenario: String,
    pub from_ms: Millis,
    pub to_ms: Millis,
}

/// Merges run outputs into one deduplicated dataset.
pub fn collect(runs: &[RunArtifacts]) -> Result<Dataset, MlopsError> {
    collect_window(runs, None)
}

/// Collects only the rows a [`DataRef`] points at.
pub fn collect_slice(runs: &[RunArtifacts], r: &DataRef) -> Result<Dataset, MlopsError> {
    let chosen: Vec<RunArtifacts> = runs.iter().filter(|a| a.scenario == r.scenario).cloned().collect();
    let ds = collect_window(&chosen, Some((r.from_ms, r.to_ms)))?;
    if ds.rows.is_empty() {
        return Err(MlopsError::EmptyInput);
    }
    Ok(ds)
}

fn collect_window(runs: &[RunArtifacts], window: Option<(Millis, Millis)>) -> Result<Dataset, MlopsError> {
    if runs.is_empty() {
        return Err(MlopsError::EmptyInput);
    }
    let mut merged: BTreeMap<RowKey, BTreeMap<String, f64>> = BTreeMap::new();
    for run in runs {
        let mut one = BTreeMap::new();
        for (name, text) in &run.files {
            let prefix = if name.starts_with("pm/") {
                "pm."
            } else if name == crate::xapps::MONITOR_SINK {
                ""
            } else {
                continue;
            };
            parse_csv(name, text, prefix, window, &mut one)?;
        }
        for ((_, t, n, c, s), vals) in one {
            merged
                .entry((run.scenario.clone(), t, n, c, s))
                .or_default()
                .extend(vals);
        }
    }
    let columns: Vec<String> = merged
        .values()
        .flat_map(|m| m.keys().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let rows: Vec<DataRow> = merged
        .into_iter()
        .map(|((scenario, time_ms, node, cell, slice), vals)| DataRow {
            scenario,
            time_ms,
            node,
            cell,
            slice,
            values: columns.iter().map(|c| vals.get(c).copied()).collect(),
        })
        .collect();
    let hash = dataset_hash(&columns, &rows);
    Ok(Dataset {
        columns,
        rows,
        norm: None,
        hash,
    })
}

fn dataset_hash(columns: &[String], rows: &[DataRow]) -> String {
    let mut h = Sha256::new();
    h.update(columns.join(",").as_bytes());
    h.update(b"\n");
    for r in rows {
        let mut line = format!("{},{},{},{},{}", r.scenario, r.time_ms, r.node, r.cell, r.slice);
        for v in &r.values {
            match v {
                Some(x) => write!(line, ",{x:?}").unwrap(),
                None => line.push(','),
            }
        }
        line.push('\n');
        h.update(line.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------------------
// Preparation

/// Min-max normalizes every column to [0, 1]; constant columns map to 0.
/// A prepared dataset is returned unchanged.
pub fn prepare(ds: &Dataset) -> Dataset {
    if ds.norm.is_some() {
        return ds.clone();
    }
    let params: Vec<(f64, f64)> = (0..ds.columns.len())
        .map(|j| {
            let vals = ds.rows.iter().filter_map(|r| r.values[j]);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() {
                (lo, hi)
            } else {
                (0.0, 0.0)
            }
        })
        .collect();
    let rows = ds
        .rows
        .iter()
        .map(|r| DataRow {
            values: r
                .values
                .iter()
                .zip(&params)
                .map(|(v, &(lo, hi))| v.map(|x| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 }))
                .collect(),
            ..r.clone()
        })
        .collect();
    Dataset {
        columns: ds.columns.clone(),
        rows,
        norm: Some(params),
        hash: ds.hash.clone(),
    }
}

/// Inverse of [`prepare`]. Constant columns come back as their constant.
pub fn denormalize(ds: &Dataset) -> Dataset {
    let Some(params) = &ds.norm else {
        return ds.clone();
    };
    let rows = ds
        .rows
        .iter()
        .map(|r| DataRow {
            values: r
                .values
                .iter()
                .zip(params)
                .map(|(v, &(lo, hi))| v.map(|x| if hi > lo { lo + x * (hi - lo) } else { lo }))
                .collect(),
            ..r.clone()
        })
        .collect();
    Dataset {
        columns: ds.columns.clone(),
        rows,
        norm: None,
        hash: ds.hash.clone(),
    }
}

// ---------------------------------------------------------------------------
// Training

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub capacity: u32,
    pub step: u32,
    /// Tabulate every grid cell, not only the observed ones.
    pub full_grid: bool,
    pub max_cells: u64,
}

impl TrainConfig {
    pub fn new(capacity: u32) -> Self {
        Self {
            capacity,
            step: 5,
            full_grid: true,
            max_cells: 200_000,
        }
    }
}

/// Calls `f` on every way to split `capacity` PRBs among `n` slices
/// (every entry ≥ 0, sum exactly `capacity`), in lexicographic order.
pub fn for_each_partition(capacity: u32, n: usize, f: &mut dyn FnMut(&[u32])) {
    fn rec(rem: u32, slot: usize, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if slot + 1 == cur.len() {
            cur[slot] = rem;
            f(cur);
            return;
        }
        for x in 0..=rem {
            cur[slot] = x;
            rec(rem - x, slot + 1, cur, f);
        }
    }
    if n == 0 {
        return;
    }
    let mut cur = vec![0; n];
    rec(capacity, 0, &mut cur, f);
}

/// Cost-minimizing split for one demand vector: the demand itself when it
/// fits, otherwise the first exact partition of minimum weighted shortfall.
pub fn optimal_split(demand: &[u32], capacity: u32, weights: &[u64]) -> Vec<u32> {
    if demand.iter().map(|&d| u64::from(d)).sum::<u64>() <= u64::from(capacity) {
        return demand.to_vec();
    }
    let mut best: Option<(u64, Vec<u32>)> = None;
    for_each_partition(capacity, demand.len(), &mut |x| {
        let c = crate::xapps::shortfall_cost(demand, x, weights);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, x.to_vec()));
        }
    });
    best.map(|b| b.1).unwrap_or_default()
}

fn grid_values(capacity: u32, step: u32) -> Vec<u32> {
    let mut v: Vec<u32> = (0..).map(|k| k * step).take_while(|&x| x < capacity).collect();
    v.push(capacity);
    v
}

/// Trains a table for the slices present in `ds` under `objectives`.
pub fn train(ds: &Dataset, cfg: &TrainConfig, objectives: &SlicingObjectives) -> Result<PolicyModel, MlopsError> {
    if cfg.step == 0 {
        return Err(MlopsError::Inconsistent("quantization step must be positive".into()));
    }
    let raw = denormalize(ds);
    let col = raw
        .columns
        .iter()
        .position(|c| c == DEMAND_COLUMN)
        .ok_or(MlopsError::EmptyInput)?;
    let slices: Vec<SliceId> = objectives.slices.keys().copied().collect();
    let mut by_instant: BTreeMap<(&str, Millis, &str, u32), BTreeMap<SliceId, f64>> = BTreeMap::new();
    for r in &raw.rows {
        if let Some(v) = r.values[col] {
            by_instant
                .entry((&r.scenario, r.time_ms, &r.node, r.cell))
                .or_default()
                .insert(SliceId(r.slice), v);
        }
    }
    let observed: BTreeSet<Vec<u32>> = by_instant
        .values()
        .filter(|m| slices.iter().all(|s| m.contains_key(s)))
        .map(|m| {
            let d: Vec<u32> = slices
                .iter()
                .map(|s| crate::xapps::ceil_prb(m[s]))
                .collect();
            quantize(&d, cfg.step, cfg.capacity)
        })
        .collect();
    if observed.is_empty() {
        return Err(MlopsError::EmptyInput);
    }
    let cells: Vec<Vec<u32>> = if cfg.full_grid {
        let axis = grid_values(cfg.capacity, cfg.step);
        let count = (axis.len() as u64).saturating_pow(slices.len() as u32);
        if count > cfg.max_cells {
            return Err(MlopsError::GridTooLarge {
                cells: count,
                max: cfg.max_cells,
            });
        }
        let mut all = vec![Vec::new()];
        for _ in &slices {
            all = all
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |&x| {
                        let mut q = p.clone();
                        q.push(x);
                        q
                    })
                })
                .collect();
        }
        all
    } else {
        if observed.len() as u64 > cfg.max_cells {
            return Err(MlopsError::GridTooLarge {
                cells: observed.len() as u64,
                max: cfg.max_cells,
            });
        }
        observed.iter().cloned().collect()
    };
    let w = objectives.weights();
    let weights: Vec<u64> = slices.iter().map(|s| w[s]).collect();
    let table = cells
        .into_iter()
        .map(|c| {
            let split = optimal_split(&c, cfg.capacity, &weights);
            (c, split)
        })
        .collect();
    let fingerprint = objectives.fingerprint();
    let mut id = Sha256::new();
    id.update(format!("{}|{}|{}|{}", ds.hash, cfg.capacity, cfg.step, fingerprint).as_bytes());
    let model_id: String = id.finalize()[..6].iter().map(|b| format!("{b:02x}")).collect();
    let scenarios: BTreeSet<String> = raw.rows.iter().map(|r| r.scenario.clone()).collect();
    Ok(PolicyModel {
        model_id: format!("m-{model_id}"),
        capacity: cfg.capacity,
        step: cfg.step,
        slices,
        objectives: fingerprint,
        dataset_hash: ds.hash.clone(),
        scenarios: scenarios.into_iter().collect(),
        table,
        validation: None,
    })
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub scenario: String,
    pub violation_rate: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationOutcome {
    pub record: ValidationRecord,
    pub verdicts: Vec<ScenarioVerdict>,
    pub simulated_ms: Millis,
}

/// Runs each held-out scenario in closed loop with `model` driving the
/// slicing xApp.
pub fn validate(model: &PolicyModel, scenarios: &[Scenario]) -> Result<ValidationOutcome, MlopsError> {
    if scenarios.is_empty() {
        return Err(MlopsError::EmptyScenarioList);
    }
    let mut verdicts = Vec::new();
    let mut simulated_ms = 0;
    for sc in scenarios {
        if !sc.xapps.iter().any(|x| x.kind == harness::XappKind::Slicing) {
            return Err(MlopsError::Inconsistent(format!(
                "validation scenario `{}` deploys no slicing xApp",
                sc.name
            )));
        }
        let mut sc = sc.clone();
        sc.model_id = None;
        let opts = RunOptions {
            candidate: Some(model.clone()),
            ..RunOptions::default()
        };
        let r = harness::run(&sc, &opts)?;
        simulated_ms += r.duration_ms;
        let rate = r.violation_rate();
        verdicts.push(ScenarioVerdict {
            scenario: sc.name.clone(),
            violation_rate: rate,
            passed: rate <= VIOLATION_BUDGET,
        });
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    Ok(ValidationOutcome {
        record: ValidationRecord {
            pass_rate: passed as f64 / verdicts.len() as f64,
            scenarios: verdicts.iter().map(|v| v.scenario.clone()).collect(),
        },
        verdicts,
        simulated_ms,
    })
}

// ---------------------------------------------------------------------------
// Execution monitoring

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainRequested {
    pub window_start_ms: Millis,
    pub window_end_ms: Millis,
    pub violation_rate: f64,
    pub data: DataRef,
}

/// Rolling objective-violation rate per fixed window of simulated time.
#[derive(Debug, Clone)]
pub struct RetrainMonitor {
    scenario: String,
    pub window_ms: Millis,
    pub threshold: f64,
    windows: u64,
    violated: u64,
}

impl RetrainMonitor {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_owned(),
            window_ms: RETRAIN_WINDOW_MS,
            threshold: RETRAIN_THRESHOLD,
            windows: 0,
            violated: 0,
        }
    }

    /// Feeds one evaluation window ending at `t`.
    pub fn observe(&mut self, t: Millis, violated: bool) -> Option<RetrainRequested> {
        self.windows += 1;
        self.violated += u64::from(violated);
        if !t.is_multiple_of(self.window_ms) {
            return None;
        }
        let rate = self.violated as f64 / self.windows as f64;
        self.windows = 0;
        self.violated = 0;
        (rate > self.threshold).then(|| RetrainRequested {
            window_start_ms: t - self.window_ms,
            window_end_ms: t,
            violation_rate: rate,
            data: DataRef {
                scenario: self.scenario.clone(),
                from_ms: t - self.window_ms,
                to_ms: t,
            },
        })
    }
}

// ---------------------------------------------------------------------------
// End to end

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    pub manifest: Manifest,
    pub validation: ValidationOutcome,
}

fn scenario_shape(sc: &Scenario) -> Result<(u32, Vec<(SliceId, SliceKind)>), MlopsError> {
    let cell = sc
        .sim
        .cells
        .first()
        .ok_or_else(|| MlopsError::Inconsistent(format!("`{}` has no cell", sc.name)))?;
    let slices = cell.slices.iter().map(|s| (SliceId(s.id), s.kind)).collect();
    Ok((cell.total_prb, slices))
}

/// Resolves a glob over scenario files when it looks like a path (contains
/// `/` or ends in `.toml`), else over bundled scenario names.
pub fn resolve_glob(pattern: &str) -> Result<Vec<Scenario>, MlopsError> {
    if pattern.contains('/') || pattern.ends_with(".toml") {
        let mut paths: Vec<_> = glob::glob(pattern)
            .map_err(|e| MlopsError::Inconsistent(format!("bad glob `{pattern}`: {e}")))?
            .filter_map(Result::ok)
            .collect();
        paths.sort();
        return paths
            .iter()
            .map(|p| Scenario::load(p).map_err(MlopsError::from))
            .collect();
    }
    let pat = glob::Pattern::new(pattern).map_err(|e| MlopsError::Inconsistent(e.to_string()))?;
    harness::BUNDLED
        .iter()
        .filter(|(n, _)| pat.matches(n))
        .map(|(n, t)| Scenario::parse(t, n).map_err(MlopsError::from))
        .collect()
}

/// collect, prepare, train, validate and publish over the training and
/// validation scenarios among `scenarios` (others are ignored).
pub fn train_pipeline(scenarios: &[Scenario], catalog: &mut Catalog) -> Result<TrainOutcome, MlopsError> {
    let train_set: Vec<&Scenario> = scenarios.iter().filter(|s| s.role == Some(ScenarioRole::Train)).collect();
    let val_set: Vec<Scenario> = scenarios
        .iter()
        .filter(|s| s.role == Some(ScenarioRole::Validate))
        .cloned()
        .collect();
    if train_set.is_empty() {
        return Err(MlopsError::EmptyInput);
    }
    let (capacity, slices) = scenario_shape(train_set[0])?;
    for s in train_set.iter().copied().chain(&val_set) {
        if scenario_shape(s)? != (capacity, slices.clone()) {
            return Err(MlopsError::Inconsistent(format!(
                "`{}` differs in capacity or slices from `{}`",
                s.name, train_set[0].name
            )));
        }
    }
    let mut runs = Vec::new();
    let mut simulated_ms = 0;
    for sc in &train_set {
        let r = harness::run(sc, &RunOptions::default())?;
        simulated_ms += r.duration_ms;
        runs.push(RunArtifacts::from_report(&r));
    }
    let ds = prepare(&collect(&runs)?);
    let objectives = SlicingObjectives::defaults(&slices);
    let model = train(&ds, &TrainConfig::new(capacity), &objectives)?;
    let validation = validate(&model, &val_set)?;
    simulated_ms += validation.simulated_ms;
    let id = model.model_id.clone();
    catalog.register(model, simulated_ms)?;
    let state = catalog.record_validation(&id, validation.record.clone())?;
    if state != ModelState::Validated {
        return Err(MlopsError::ValidationFailed {
            model_id: id,
            pass_rate: validation.record.pass_rate,
        });
    }
    let manifest = catalog.publish(&id)?;
    let model = catalog.entry(&id).expect("just published").model.clone();
    Ok(TrainOutcome {
        model,
        manifest,
        validation,
    })
}

/// `train <glob>`: the published model id.
pub fn train_cmd(pattern: &str, catalog_root: &Path) -> Result<TrainOutcome, MlopsError> {
    let scenarios = resolve_glob(pattern)?;
    if scenarios.is_empty() {
        return Err(MlopsError::EmptyInput);
    }
    train_pipeline(&scenarios, &mut Catalog::new(catalog_root))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_count_stars_and_bars() {
        let mut n = 0;
        for_each_partition(10, 3, &mut |x| {
            assert_eq!(x.iter().sum::<u32>(), 10);
            n += 1;
        });
        assert_eq!(n, 66);
    }

    #[test]
    fn split_examples() {
        assert_eq!(optimal_split(&[0, 0, 0], 50, &[3, 2, 1]), vec![0, 0, 0]);
        assert_eq!(optimal_split(&[10, 20, 5], 50, &[3, 2, 1]), vec![10, 20, 5]);
        assert_eq!(optimal_split(&[40, 30, 10], 50, &[3, 2, 1]), vec![40, 10, 0]);
    }

    #[test]
    fn normalization_degenerate_and_span() {
        let row = |v: f64, w: f64| DataRow {
            scenario: "s".into(),
            time_ms: 0,
            node: "n".into(),
            cell: 0,
            slice: 0,
            values: vec![Some(v), Some(w)],
        };
        let ds = Dataset {
            columns: vec!["a".into(), "b".into()],
            rows: vec![row(7.0, 0.0), row(7.0, 50.0)],
            norm: None,
            hash: String::new(),
        };
        let p = prepare(&ds);
        assert_eq!(p.norm, Some(vec![(7.0, 7.0), (0.0, 50.0)]));
        assert_eq!(p.rows[0].values, vec![Some(0.0), Some(0.0)]);
        assert_eq!(p.rows[1].values, vec![Some(0.0), Some(1.0)]);
        assert_eq!(denormalize(&p), ds);
    }

    #[test]
    fn retrain_threshold() {
        let mut m = RetrainMonitor::new("s");
        let mut ev = Vec::new();
        for k in 1..=100u64 {
            ev.extend(m.observe(k * 100, k > 50 && k % 5 == 0));
        }
        assert_eq!(ev.len(), 1);
        assert_eq!(ev[0].window_start_ms, 5000);
        assert!((ev[0].violation_rate - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(collect(&[]), Err(MlopsError::EmptyInput)));
        let m = PolicyModel {
            model_id: "x".into(),
            capacity: 10,
            step: 5,
            slices: vec![],
            objectives: String::new(),
            dataset_hash: String::new(),
            scenarios: vec![],
            table: BTreeMap::new(),
            validation: None,
        };
        assert!(matches!(validate(&m, &[]), Err(MlopsError::EmptyScenarioList)));
    }
}
