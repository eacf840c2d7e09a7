//! Mixed-initiative browsing sessions over loaded models.
//!
//! A session never stores a residual it could not recompute: its current
//! program is always the model specialized by the union of its history.
//! The store is safe to share across threads. Each session sits behind its
//! own lock, so requests to one session are serialized while different
//! sessions proceed independently.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ispace::{parse, Assignment, IspaceError, Program, Test};
use crate::specializer::{specialize, SpecializeError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("model `{0}` already exists")]
    ModelExists(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("inconsistent input: {0}")]
    InconsistentAssignment(String),
    #[error("no content survives this input")]
    EmptyResidual,
    #[error("`{0}` is not a choice at the current root")]
    NoSuchArm(String),
    #[error("nothing to undo")]
    EmptyHistory,
    #[error(transparent)]
    Syntax(#[from] IspaceError),
    #[error("snapshot: {0}")]
    Snapshot(String),
}

impl From<SpecializeError> for ServiceError {
    fn from(e: SpecializeError) -> Self {
        match e {
            SpecializeError::EmptyResidual => ServiceError::EmptyResidual,
            other => ServiceError::InconsistentAssignment(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Input,
    Browse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub action: Action,
    pub delta: Assignment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct View {
    pub session: String,
    pub model: String,
    pub residual: Program,
    /// Tests of the chains at the residual's root, in order.
    pub available: Vec<Test>,
    pub is_complete: bool,
    pub breadcrumb: Vec<HistoryEntry>,
}

impl View {
    /// Equality on everything the user sees of the space itself, ignoring
    /// how the session got there.
    pub fn same_state(&self, other: &View) -> bool {
        self.model == other.model
            && self.residual == other.residual
            && self.available == other.available
            && self.is_complete == other.is_complete
    }
}

struct Session {
    id: String,
    model_id: String,
    model: Arc<Program>,
    history: Vec<HistoryEntry>,
    accumulated: Assignment,
    current: Program,
}

impl Session {
    fn view(&self) -> View {
        let available = self
            .current
            .root()
            .root_chains()
            .into_iter()
            .flat_map(|arms| arms.iter().map(|a| a.test.clone()))
            .collect();
        View {
            session: self.id.clone(),
            model: self.model_id.clone(),
            residual: self.current.clone(),
            available,
            is_complete: self.current.is_complete(),
            breadcrumb: self.history.clone(),
        }
    }

    /// Applies `delta` on top of the accumulated input, or leaves the
    /// session untouched on error.
    fn push(&mut self, action: Action, delta: Assignment) -> Result<(), ServiceError> {
        let merged = self
            .accumulated
            .merge(&delta)
            .map_err(|e| ServiceError::InconsistentAssignment(e.to_string()))?;
        let residual = specialize(&self.model, &merged)?.residual;
        self.history.push(HistoryEntry { action, delta });
        self.accumulated = merged;
        self.current = residual;
        Ok(())
    }

    fn replay(&mut self) -> Result<(), ServiceError> {
        let mut acc = Assignment::new();
        for h in &self.history {
            acc = acc
                .merge(&h.delta)
                .map_err(|e| ServiceError::InconsistentAssignment(e.to_string()))?;
        }
        self.current = specialize(&self.model, &acc)?.residual;
        self.accumulated = acc;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub model: String,
    pub history: Vec<HistoryEntry>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub models: BTreeMap<String, Program>,
    pub sessions: Vec<SessionSnapshot>,
}

#[derive(Default)]
pub struct SessionStore {
    models: RwLock<BTreeMap<String, Arc<Program>>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    uploads: AtomicUsize,
}

fn new_token() -> String {
    format!("{:032x}", rand::random::<u128>())
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_model(&self, id: impl Into<String>, program: Program) -> Result<(), ServiceError> {
        let id = id.into();
        let mut models = self.models.write().expect("model table poisoned");
        if models.contains_key(&id) {
            return Err(ServiceError::ModelExists(id));
        }
        models.insert(id, Arc::new(program));
        Ok(())
    }

    /// Parses DSL text and registers it, under `name` if given.
    pub fn upload_model(&self, name: Option<&str>, dsl: &str) -> Result<String, ServiceError> {
        let program = parse(dsl)?;
        let id = match name {
            Some(n) => n.to_string(),
            None => loop {
                let n = self.uploads.fetch_add(1, Ordering::Relaxed) + 1;
                let id = format!("model-{n}");
                if !self.models.read().expect("model table poisoned").contains_key(&id) {
                    break id;
                }
            },
        };
        self.add_model(id.clone(), program)?;
        Ok(id)
    }

    pub fn list_models(&self) -> Vec<String> {
        self.models.read().expect("model table poisoned").keys().cloned().collect()
    }

    pub fn model(&self, id: &str) -> Result<Arc<Program>, ServiceError> {
        self.models
            .read()
            .expect("model table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownModel(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut Session) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let s = self.session(id)?;
        let mut guard = s.lock().expect("session poisoned");
        f(&mut guard)
    }

    pub fn create_session(&self, model_id: &str) -> Result<View, ServiceError> {
        let model = self.model(model_id)?;
        let session = Session {
            id: new_token(),
            model_id: model_id.to_string(),
            current: (*model).clone(),
            model,
            history: Vec::new(),
            accumulated: Assignment::new(),
        };
        let view = session.view();
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(session.id.clone(), Arc::new(Mutex::new(session)));
        Ok(view)
    }

    pub fn view(&self, session: &str) -> Result<View, ServiceError> {
        self.with_session(session, |s| Ok(s.view()))
    }

    /// Out-of-turn input. An empty delta changes nothing and is not
    /// recorded.
    pub fn apply_input(&self, session: &str, delta: Assignment) -> Result<View, ServiceError> {
        self.with_session(session, |s| {
            if !delta.is_empty() {
                s.push(Action::Input, delta)?;
            }
            Ok(s.view())
        })
    }

    /// Follows one of the arms offered at the current root.
    pub fn browse(&self, session: &str, test: &Test) -> Result<View, ServiceError> {
        self.with_session(session, |s| {
            if !s.view().available.contains(test) {
                return Err(ServiceError::NoSuchArm(test.to_string()));
            }
            let delta = Assignment::with_chosen([test.clone()])
                .map_err(|e| ServiceError::InconsistentAssignment(e.to_string()))?;
            s.push(Action::Browse, delta)?;
            Ok(s.view())
        })
    }

    pub fn undo(&self, session: &str) -> Result<View, ServiceError> {
        self.with_session(session, |s| {
            let last = s.history.pop().ok_or(ServiceError::EmptyHistory)?;
            if let Err(e) = s.replay() {
                s.history.push(last);
                return Err(e);
            }
            Ok(s.view())
        })
    }

    pub fn reset(&self, session: &str) -> Result<View, ServiceError> {
        self.with_session(session, |s| {
            s.history.clear();
            s.accumulated = Assignment::new();
            s.current = (*s.model).clone();
            Ok(s.view())
        })
    }

    pub fn snapshot(&self) -> Snapshot {
        let models = self
            .models
            .read()
            .expect("model table poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), (**v).clone()))
            .collect();
        let table = self.sessions.read().expect("session table poisoned");
        let mut sessions: Vec<SessionSnapshot> = table
            .values()
            .map(|s| {
                let s = s.lock().expect("session poisoned");
                SessionSnapshot {
                    id: s.id.clone(),
                    model: s.model_id.clone(),
                    history: s.history.clone(),
                }
            })
            .collect();
        sessions.sort_by(|a, b| a.id.cmp(&b.id));
        Snapshot { models, sessions }
    }

    /// Rebuilds a store, replaying every session's history.
    pub fn restore(snap: Snapshot) -> Result<Self, ServiceError> {
        let store = SessionStore::new();
        for (id, p) in snap.models {
            store.add_model(id, p)?;
        }
        for ss in snap.sessions {
            let model = store.model(&ss.model)?;
            let mut s = Session {
                id: ss.id,
                model_id: ss.model,
                current: (*model).clone(),
                model,
                history: ss.history,
                accumulated: Assignment::new(),
            };
            s.replay()?;
            store
                .sessions
                .write()
                .expect("session table poisoned")
                .insert(s.id.clone(), Arc::new(Mutex::new(s)));
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<(), ServiceError> {
        let text = serde_json::to_string_pretty(&self.snapshot())
            .map_err(|e| ServiceError::Snapshot(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| ServiceError::Snapshot(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Snapshot(format!("{}: {e}", path.display())))?;
        let snap: Snapshot =
            serde_json::from_str(&text).map_err(|e| ServiceError::Snapshot(e.to_string()))?;
        SessionStore::restore(snap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> SessionStore {
        let s = SessionStore::new();
        s.upload_model(Some("congress"), include_str!("../fixtures/congress.ispace"))
            .unwrap();
        s
    }

    fn input(entries: &[&str]) -> Assignment {
        Assignment::parse_entries(entries.iter().copied()).unwrap()
    }

    fn t(s: &str) -> Test {
        s.parse().unwrap()
    }

    #[test]
    fn fresh_session_offers_branches() {
        let st = store();
        let v = st.create_session("congress").unwrap();
        assert_eq!(v.available, [t("Sen"), t("Repr")]);
        assert!(!v.is_complete);
        assert_eq!(st.create_session("nope").unwrap_err(), ServiceError::UnknownModel("nope".into()));
    }

    #[test]
    fn content_only_model_is_complete() {
        let st = SessionStore::new();
        st.upload_model(Some("home"), "page \"home\";").unwrap();
        assert!(st.create_session("home").unwrap().is_complete);
    }

    #[test]
    fn input_matches_golden_residual() {
        let st = store();
        let id = st.create_session("congress").unwrap().session;
        let v = st.apply_input(&id, input(&["Dem"])).unwrap();
        let golden = parse(include_str!("../fixtures/congress-democrats.ispace")).unwrap();
        assert!(v.residual.same_structure(&golden));
        assert_eq!(v.breadcrumb.len(), 1);
    }

    #[test]
    fn empty_input_is_a_no_op() {
        let st = store();
        let before = st.create_session("congress").unwrap();
        let after = st.apply_input(&before.session, Assignment::new()).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn conflicts_leave_session_unchanged() {
        let st = store();
        let id = st.create_session("congress").unwrap().session;
        let v = st.apply_input(&id, input(&["Dem"])).unwrap();
        assert!(matches!(
            st.apply_input(&id, input(&["Rep"])),
            Err(ServiceError::InconsistentAssignment(_))
        ));
        assert_eq!(st.view(&id).unwrap(), v);
        assert_eq!(st.apply_input(&id, input(&["!CA", "!NY"])), Err(ServiceError::EmptyResidual));
        assert_eq!(st.view(&id).unwrap(), v);
    }

    #[test]
    fn browse_descends() {
        let st = store();
        let id = st.create_session("congress").unwrap().session;
        let v = st.browse(&id, &t("Sen")).unwrap();
        assert_eq!(v.available, [t("Dem"), t("Rep")]);
        assert_eq!(v.breadcrumb[0].action, Action::Browse);
        assert!(matches!(st.browse(&id, &t("CA")), Err(ServiceError::NoSuchArm(_))));
        st.browse(&id, &t("Dem")).unwrap();
        let done = st.browse(&id, &t("CA")).unwrap();
        assert!(done.is_complete);
        assert!(matches!(st.browse(&id, &t("NY")), Err(ServiceError::NoSuchArm(_))));
    }

    #[test]
    fn browse_then_input_equals_joint_input() {
        let st = store();
        let a = st.create_session("congress").unwrap().session;
        st.browse(&a, &t("Sen")).unwrap();
        let va = st.apply_input(&a, input(&["CA"])).unwrap();
        let b = st.create_session("congress").unwrap().session;
        let vb = st.apply_input(&b, input(&["Sen", "CA"])).unwrap();
        assert!(va.same_state(&vb));
        assert_ne!(va, vb);
    }

    #[test]
    fn undo_and_reset() {
        let st = store();
        let initial = st.create_session("congress").unwrap();
        let id = initial.session.clone();
        assert_eq!(st.undo(&id), Err(ServiceError::EmptyHistory));
        st.apply_input(&id, input(&["Dem"])).unwrap();
        assert_eq!(st.undo(&id).unwrap(), initial);
        st.apply_input(&id, input(&["Dem"])).unwrap();
        st.browse(&id, &t("Sen")).unwrap();
        assert_eq!(st.reset(&id).unwrap(), initial);
    }

    #[test]
    fn sessions_are_isolated() {
        let st = store();
        let a = st.create_session("congress").unwrap();
        let b = st.create_session("congress").unwrap();
        assert_ne!(a.session, b.session);
        st.apply_input(&a.session, input(&["Dem"])).unwrap();
        assert_eq!(st.view(&b.session).unwrap(), b);
    }

    #[test]
    fn uploads_get_fresh_ids() {
        let st = store();
        let id = st.upload_model(None, include_str!("../fixtures/congress.ispace")).unwrap();
        assert_eq!(st.list_models(), ["congress", id.as_str()]);
        assert!(matches!(st.upload_model(None, ""), Err(ServiceError::Syntax(_))));
        assert!(matches!(
            st.upload_model(Some("congress"), "page \"x\";"),
            Err(ServiceError::ModelExists(_))
        ));
    }

    #[test]
    fn snapshot_round_trip() {
        let st = store();
        let id = st.create_session("congress").unwrap().session;
        st.browse(&id, &t("Sen")).unwrap();
        let v = st.apply_input(&id, input(&["Party=Dem"])).unwrap();
        let dir = std::env::temp_dir().join(format!("pipe-snap-{}", new_token()));
        st.save(&dir).unwrap();
        let back = SessionStore::load(&dir).unwrap();
        std::fs::remove_file(&dir).ok();
        assert_eq!(back.view(&id).unwrap(), v);
        assert_eq!(back.snapshot(), st.snapshot());
    }
}
