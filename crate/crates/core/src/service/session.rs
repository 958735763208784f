//! Analyst sessions: query history forest, flags and idempotent replies,
//! persisted as one JSON file per session.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Mutex;

use crate::error::{Error, Result};
use crate::knn::{Aggregation, Hit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlagState {
    Suspicious,
    Benign,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub state: FlagState,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub parent: Option<String>,
    pub seeds: Vec<String>,
    pub space: String,
    pub k: usize,
    pub aggregation: Aggregation,
    pub hits: Vec<Hit>,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub dataset: String,
    pub active_space: Option<String>,
    pub created_at: String,
    #[serde(default)]
    pub notes: String,
    #[serde(default)]
    pub history: Vec<QueryRecord>,
    #[serde(default)]
    pub flags: BTreeMap<String, Flag>,
    /// Request id of the call that created the session.
    #[serde(default)]
    pub creation_request: Option<String>,
    /// Stored replies of mutating calls, keyed by client request id.
    #[serde(default)]
    pub responses: BTreeMap<String, Value>,
}

pub fn now_utc() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl Session {
    pub fn new(dataset: impl Into<String>, active_space: Option<String>, notes: String) -> Self {
        Session {
            session_id: uuid::Uuid::new_v4().to_string(),
            dataset: dataset.into(),
            active_space,
            created_at: now_utc(),
            notes,
            history: Vec::new(),
            flags: BTreeMap::new(),
            creation_request: None,
            responses: BTreeMap::new(),
        }
    }

    /// Most recent query whose hits contain any of `seeds`.
    pub fn parent_for(&self, seeds: &[String]) -> Option<String> {
        self.history
            .iter()
            .rev()
            .find(|q| q.hits.iter().any(|h| seeds.contains(&h.id)))
            .map(|q| q.query_id.clone())
    }

    pub fn next_query_id(&self) -> String {
        format!("q{}", self.history.len() + 1)
    }

    /// Canonical serialization used for persistence and export.
    pub fn to_canonical_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Check the history forest: unique ids, parents precede children.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for q in &self.history {
            if let Some(p) = &q.parent {
                if !seen.contains(p.as_str()) {
                    return Err(Error::Format(format!("query {} references unknown parent {p}", q.query_id)));
                }
            }
            if !seen.insert(q.query_id.as_str()) {
                return Err(Error::Format(format!("duplicate query id {}", q.query_id)));
            }
        }
        Ok(())
    }
}

type Shared = Arc<Mutex<Session>>;

/// In-memory session map with optional file persistence. Each session has
/// its own lock so mutations of one session are serialized while others
/// proceed.
#[derive(Debug, Default)]
pub struct SessionStore {
    dir: Option<PathBuf>,
    sessions: RwLock<HashMap<String, Shared>>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Open `dir`, loading every `*.json` session in it.
    pub fn open(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                let s: Session = serde_json::from_str(&fs::read_to_string(&path)?)
                    .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
                sessions.insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(SessionStore { dir: Some(dir.to_path_buf()), sessions: RwLock::new(sessions) })
    }

    pub fn get(&self, id: &str) -> Option<Shared> {
        self.sessions.read().expect("session map poisoned").get(id).cloned()
    }

    /// Session previously created with this request id.
    pub async fn find_by_creation_request(&self, request_id: &str) -> Option<Shared> {
        let all: Vec<Shared> = self.sessions.read().expect("session map poisoned").values().cloned().collect();
        for s in all {
            if s.lock().await.creation_request.as_deref() == Some(request_id) {
                return Some(s);
            }
        }
        None
    }

    /// Persist and register a session, replacing one with the same id.
    pub fn insert(&self, session: Session) -> Result<Shared> {
        self.persist(&session)?;
        let id = session.session_id.clone();
        let shared = Arc::new(Mutex::new(session));
        self.sessions.write().expect("session map poisoned").insert(id, shared.clone());
        Ok(shared)
    }

    /// Write `<dir>/<id>.json` through a temporary file and a rename.
    pub fn persist(&self, session: &Session) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        if session.session_id.contains(['/', '\\']) || session.session_id.starts_with('.') {
            return Err(Error::InvalidArgument(format!("bad session id '{}'", session.session_id)));
        }
        let path = dir.join(format!("{}.json", session.session_id));
        let tmp = dir.join(format!(".{}.json.tmp", session.session_id));
        fs::write(&tmp, session.to_canonical_json()?)?;
        fs::rename(&tmp, &path)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("session map poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
