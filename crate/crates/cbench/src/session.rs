//! Sessions: one analysis per id, persisted as a versioned JSON document in
//! its own directory under the data root.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use dashmap::DashMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use cbench_core::assoc::{AssocGraph, CommunityAssignment};
use cbench_core::dataset::Dataset;
use cbench_core::decision::{DecisionSpec, PolicyTable};
use cbench_core::fit::FittedBn;
use cbench_core::graph::Dag;
use cbench_core::learn::{BootstrapConfig, ModelDocument, SearchConfig, StrengthTable, ValidationReport};

use crate::error::{ApiError, ApiResult};

pub const SESSION_VERSION: u32 = 1;
const SESSION_FILE: &str = "session.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: usize,
    pub action: String,
    #[serde(default)]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub version: u32,
    pub id: String,
    /// Bumped whenever the dataset changes; jobs started on an older
    /// revision are not applied.
    pub revision: u64,
    pub dataset: Option<Dataset>,
    pub assoc: Option<AssocGraph>,
    pub communities: Option<CommunityAssignment>,
    pub search: Option<SearchConfig>,
    pub bootstrap: Option<BootstrapConfig>,
    pub strengths: Option<StrengthTable>,
    pub dag: Option<Dag>,
    pub fitted: Option<FittedBn>,
    pub decision: Option<DecisionSpec>,
    pub policy: Option<PolicyTable>,
    pub validation: Option<ValidationReport>,
    pub history: Vec<HistoryEntry>,
}

impl Session {
    pub fn new(id: String) -> Self {
        Session {
            version: SESSION_VERSION,
            id,
            revision: 0,
            dataset: None,
            assoc: None,
            communities: None,
            search: None,
            bootstrap: None,
            strengths: None,
            dag: None,
            fitted: None,
            decision: None,
            policy: None,
            validation: None,
            history: Vec::new(),
        }
    }

    pub fn record(&mut self, action: &str, params: Value) {
        let seq = self.history.len();
        self.history.push(HistoryEntry {
            seq,
            action: action.to_string(),
            params,
        });
    }

    /// Replaces the dataset and drops every artifact derived from it.
    pub fn set_dataset(&mut self, ds: Dataset) {
        self.dataset = Some(ds);
        self.revision += 1;
        self.assoc = None;
        self.communities = None;
        self.search = None;
        self.bootstrap = None;
        self.strengths = None;
        self.validation = None;
        self.clear_structure();
    }

    /// Replaces the structure and drops the parameters and decisions fitted
    /// to the old one.
    pub fn set_dag(&mut self, dag: Dag) {
        self.clear_structure();
        self.dag = Some(dag);
    }

    fn clear_structure(&mut self) {
        self.dag = None;
        self.fitted = None;
        self.decision = None;
        self.policy = None;
    }

    pub fn dataset(&self) -> ApiResult<&Dataset> {
        self.dataset
            .as_ref()
            .ok_or_else(|| ApiError::precondition("upload a dataset first"))
    }

    pub fn dag(&self) -> ApiResult<&Dag> {
        self.dag
            .as_ref()
            .ok_or_else(|| ApiError::precondition("learn or import a structure first"))
    }

    pub fn fitted(&self) -> ApiResult<&FittedBn> {
        self.fitted.as_ref().ok_or_else(|| ApiError::precondition("fit the network first"))
    }

    pub fn model_document(&self) -> ApiResult<ModelDocument> {
        let mut doc = ModelDocument::new(self.dag()?.clone());
        doc.strengths = self.strengths.clone();
        doc.search = self.search.clone();
        doc.bootstrap = self.bootstrap.clone();
        doc.fitted = self.fitted.clone();
        Ok(doc)
    }
}

/// Sessions cached in memory and mirrored to `<root>/<id>/session.json`.
/// Each session sits behind its own lock, so work on distinct sessions
/// never interleaves.
pub struct SessionStore {
    root: PathBuf,
    live: DashMap<String, Arc<Mutex<Session>>>,
}

fn valid_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| b.is_ascii_hexdigit())
}

impl SessionStore {
    pub fn open(root: impl Into<PathBuf>) -> std::io::Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(SessionStore {
            root,
            live: DashMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn create(&self) -> ApiResult<String> {
        let id = format!("{:032x}", rand::rng().random::<u128>());
        let session = Session::new(id.clone());
        self.save(&session)?;
        self.live.insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    /// The live session, restored from disk if it is not in memory.
    pub fn get(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        if let Some(s) = self.live.get(id) {
            return Ok(Arc::clone(&s));
        }
        let session = self.restore(id)?;
        let entry = self
            .live
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(session)));
        Ok(Arc::clone(&entry))
    }

    pub fn restore(&self, id: &str) -> ApiResult<Session> {
        if !valid_id(id) {
            return Err(ApiError::not_found(format!("no session `{id}`")));
        }
        let path = self.root.join(id).join(SESSION_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(ApiError::not_found(format!("no session `{id}`")))
            }
            Err(e) => return Err(ApiError::internal(format!("cannot read session: {e}"))),
        };
        let value: Value = serde_json::from_str(&text)?;
        let found = value.get("version").and_then(Value::as_u64).unwrap_or(0);
        if found != u64::from(SESSION_VERSION) {
            return Err(cbench_core::Error::Version {
                found: u32::try_from(found).unwrap_or(u32::MAX),
                expected: SESSION_VERSION,
            }
            .into());
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Writes the document next to its final name and renames it into place.
    pub fn save(&self, session: &Session) -> ApiResult<()> {
        let dir = self.root.join(&session.id);
        let io = |e: std::io::Error| ApiError::internal(format!("cannot persist session: {e}"));
        fs::create_dir_all(&dir).map_err(io)?;
        let tmp = dir.join(format!("{SESSION_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec(session)?).map_err(io)?;
        fs::rename(&tmp, dir.join(SESSION_FILE)).map_err(io)?;
        Ok(())
    }

    /// Drops the in-memory copy; the next access reloads from disk.
    pub fn evict(&self, id: &str) {
        self.live.remove(id);
    }
}
