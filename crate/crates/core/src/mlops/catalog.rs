//! Model catalog: trained and validated entries are staged in memory,
//! published ones live on disk as `<root>/<model_id>/{model.tbl,
//! manifest.txt}` and never change afterwards.

use crate::ric::Ric;
use crate::xapps::{PolicyModel, SlicingXapp, ValidationRecord, MIN_PASS_RATE};
use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MODEL_FILE: &str = "model.tbl";
pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("model `{0}` is already published and cannot change")]
    ImmutableEntry(String),
    #[error("model `{0}` has not passed validation")]
    NotValidated(String),
    #[error("model `{0}` is not published")]
    NotPublished(String),
    #[error("no catalog entry `{0}`")]
    UnknownModel(String),
    #[error("catalog i/o: {0}")]
    Io(String),
    #[error("deploying `{model}` to `{xapp}`: {reason}")]
    Deploy {
        model: String,
        xapp: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModelState {
    Trained,
    Validated,
    Published,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub model: PolicyModel,
    pub state: ModelState,
    pub created_at_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub model_id: String,
    pub dataset_hash: String,
    pub pass_rate: f64,
    pub created_at_ms: u64,
    pub validation_scenarios: Vec<String>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "model_id: {}", self.model_id).unwrap();
        writeln!(s, "dataset_hash: {}", self.dataset_hash).unwrap();
        writeln!(s, "pass_rate: {}", self.pass_rate).unwrap();
        writeln!(s, "created_at_ms: {}", self.created_at_ms).unwrap();
        writeln!(s, "validation_scenarios: {}", self.validation_scenarios.join(",")).unwrap();
        s
    }

    pub fn parse(text: &str) -> Option<Manifest> {
        let mut m: BTreeMap<&str, &str> = BTreeMap::new();
        for line in text.lines() {
            let (k, v) = line.split_once(':')?;
            m.insert(k.trim(), v.trim());
        }
        Some(Manifest {
            model_id: m.get("model_id")?.to_string(),
            dataset_hash: m.get("dataset_hash")?.to_string(),
            pass_rate: m.get("pass_rate")?.parse().ok()?,
            created_at_ms: m.get("created_at_ms")?.parse().ok()?,
            validation_scenarios: m
                .get("validation_scenarios")?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        })
    }
}

pub struct Catalog {
    root: PathBuf,
    staged: BTreeMap<String, CatalogEntry>,
}

impl Catalog {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            staged: BTreeMap::new(),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    fn is_published(&self, id: &str) -> bool {
        self.entry_dir(id).join(MANIFEST_FILE).is_file()
    }

    pub fn state(&self, id: &str) -> Option<ModelState> {
        if self.is_published(id) {
            return Some(ModelState::Published);
        }
        self.staged.get(id).map(|e| e.state)
    }

    pub fn entry(&self, id: &str) -> Option<&CatalogEntry> {
        self.staged.get(id)
    }

    /// Stages a freshly trained model. Any validation record it carries is
    /// dropped: only [`Catalog::record_validation`] may set one.
    pub fn register(&mut self, mut model: PolicyModel, created_at_ms: u64) -> Result<(), CatalogError> {
        if self.is_published(&model.model_id) {
            return Err(CatalogError::ImmutableEntry(model.model_id));
        }
        model.validation = None;
        self.staged.insert(
            model.model_id.clone(),
            CatalogEntry {
                model,
                state: ModelState::Trained,
                created_at_ms,
            },
        );
        Ok(())
    }

    /// Attaches a validation result. The entry becomes validated when the
    /// pass rate meets the threshold and otherwise stays trained.
    pub fn record_validation(
        &mut self,
        id: &str,
        record: ValidationRecord,
    ) -> Result<ModelState, CatalogError> {
        if self.is_published(id) {
            return Err(CatalogError::ImmutableEntry(id.to_owned()));
        }
        let e = self
            .staged
            .get_mut(id)
            .ok_or_else(|| CatalogError::UnknownModel(id.to_owned()))?;
        if record.pass_rate >= MIN_PASS_RATE && !record.scenarios.is_empty() {
            e.model.validation = Some(record);
            e.state = ModelState::Validated;
        } else {
            e.model.validation = None;
            e.state = ModelState::Trained;
        }
        Ok(e.state)
    }

    /// Writes the model and its manifest; the directory appears atomically.
    pub fn publish(&mut self, id: &str) -> Result<Manifest, CatalogError> {
        if self.is_published(id) {
            return Err(CatalogError::ImmutableEntry(id.to_owned()));
        }
        let e = self
            .staged
            .get(id)
            .ok_or_else(|| CatalogError::UnknownModel(id.to_owned()))?;
        let v = match (&e.state, &e.model.validation) {
            (ModelState::Validated, Some(v)) => v.clone(),
            _ => return Err(CatalogError::NotValidated(id.to_owned())),
        };
        let manifest = Manifest {
            model_id: id.to_owned(),
            dataset_hash: e.model.dataset_hash.clone(),
            pass_rate: v.pass_rate,
            created_at_ms: e.created_at_ms,
            validation_scenarios: v.scenarios,
        };
        let io = |e: std::io::Error| CatalogError::Io(e.to_string());
        std::fs::create_dir_all(&self.root).map_err(io)?;
        let tmp = self.root.join(format!(".{id}.tmp"));
        if tmp.exists() {
            std::fs::remove_dir_all(&tmp).map_err(io)?;
        }
        std::fs::create_dir(&tmp).map_err(io)?;
        std::fs::write(tmp.join(MODEL_FILE), e.model.to_text()).map_err(io)?;
        std::fs::write(tmp.join(MANIFEST_FILE), manifest.to_text()).map_err(io)?;
        std::fs::rename(&tmp, self.entry_dir(id)).map_err(io)?;
        if let Some(e) = self.staged.get_mut(id) {
            e.state = ModelState::Published;
        }
        Ok(manifest)
    }

    pub fn manifest(&self, id: &str) -> Result<Manifest, CatalogError> {
        let text = std::fs::read_to_string(self.entry_dir(id).join(MANIFEST_FILE))
            .map_err(|_| CatalogError::NotPublished(id.to_owned()))?;
        Manifest::parse(&text).ok_or_else(|| CatalogError::Io(format!("unreadable manifest for `{id}`")))
    }

    /// Model file of a published entry.
    pub fn deployable_path(&self, id: &str) -> Result<PathBuf, CatalogError> {
        if !self.is_published(id) {
            return Err(CatalogError::NotPublished(id.to_owned()));
        }
        Ok(self.entry_dir(id).join(MODEL_FILE))
    }

    /// File-based deployment: (re)starts the slicing xApp `xapp` on `ric`
    /// with the published model's path in its descriptor.
    pub fn deploy(&self, id: &str, ric: &mut Ric, xapp: &str, priority: i64) -> Result<(), CatalogError> {
        let path = self.deployable_path(id)?;
        let fail = |reason: String| CatalogError::Deploy {
            model: id.to_owned(),
            xapp: xapp.to_owned(),
            reason,
        };
        let mut desc = SlicingXapp::descriptor(priority);
        desc.name = xapp.to_owned();
        desc.version = format!("1.0.0+{id}");
        desc.model_path = Some(path.display().to_string());
        let app = SlicingXapp::from_descriptor(&desc).map_err(|e| fail(e.to_string()))?;
        if ric.is_deployed(xapp) {
            ric.terminate(xapp).map_err(|e| fail(e.to_string()))?;
        }
        match ric.onboard(desc) {
            Ok(()) | Err(crate::ric::RicError::DuplicateName(_)) => {}
            Err(e) => return Err(fail(e.to_string())),
        }
        ric.deploy(xapp, Box::new(app)).map_err(|e| fail(e.to_string()))
    }
}
