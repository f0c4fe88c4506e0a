//! Directory-per-session persistence with compare-and-swap on the model
//! revision.
//!
//! Layout under the store root:
//!
//! ```text
//! <session>/session.json        cap and KB source
//! <session>/revisions/<rev>.json  immutable model documents
//! <session>/history.json        applied plans, oldest first
//! ```

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use afscr_core::{
    analyze, apply_plan, to_document_json, ConflictReport, GoalModel, KnowledgeBase,
    RefactoringPlan, ResolutionContext,
};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown revision `{0}`")]
    UnknownRevision(String),
    #[error("no plan with digest `{0}` for the current revision")]
    UnknownDigest(String),
    #[error(
        "plan `{digest}` was computed against revision {issued_for}; the session is at {head}"
    )]
    Stale {
        digest: String,
        issued_for: String,
        head: String,
    },
    #[error(transparent)]
    Engine(#[from] afscr_core::Error),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
    #[error("storage: {0}")]
    Encoding(#[from] serde_json::Error),
}

/// One step of the revision chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub revision: String,
    pub parent: String,
    pub finding: String,
    pub label: String,
    pub digest: String,
    pub plan: RefactoringPlan,
}

#[derive(Serialize, Deserialize)]
struct SessionMeta {
    id: Uuid,
    cap: usize,
    kb_source: String,
    initial: String,
}

pub struct Session {
    pub id: Uuid,
    pub cap: usize,
    pub kb: KnowledgeBase,
    pub kb_source: String,
    pub initial: String,
    pub head: String,
    revisions: HashMap<String, GoalModel>,
    pub history: Vec<HistoryEntry>,
    /// Every plan digest handed out, keyed to the revision it was built on.
    issued: HashMap<String, String>,
    dir: PathBuf,
}

impl Session {
    pub fn model(&self, revision: &str) -> Result<&GoalModel, StoreError> {
        self.revisions
            .get(revision)
            .ok_or_else(|| StoreError::UnknownRevision(revision.to_string()))
    }

    pub fn head_model(&self) -> &GoalModel {
        &self.revisions[&self.head]
    }

    pub fn analyze(&self, revision: &str) -> Result<ConflictReport, StoreError> {
        Ok(analyze(self.model(revision)?, &self.kb, self.cap)?.1)
    }

    /// Findings at the head revision with their candidate plans; every
    /// digest returned is remembered so a later replay can be told apart
    /// from a digest that never existed.
    pub fn plans(
        &mut self,
    ) -> Result<Vec<(afscr_core::Finding, Vec<RefactoringPlan>)>, StoreError> {
        let model = &self.revisions[&self.head];
        let ctx = ResolutionContext::analyze(model, &self.kb, self.cap)?;
        let all = ctx.all_plans()?;
        for (_, plans) in &all {
            for p in plans {
                self.issued
                    .insert(p.digest.clone(), p.base_revision.clone());
            }
        }
        Ok(all)
    }

    /// Applies the head plan for `finding` with `digest`, advancing the head.
    pub fn apply(&mut self, finding: &str, digest: &str) -> Result<&HistoryEntry, StoreError> {
        let candidates = self.plans()?;
        let plan = candidates
            .into_iter()
            .filter(|(f, _)| f.id == finding)
            .flat_map(|(_, plans)| plans)
            .find(|p| p.digest == digest);
        let Some(plan) = plan else {
            return Err(match self.issued.get(digest) {
                Some(rev) if *rev != self.head => StoreError::Stale {
                    digest: digest.to_string(),
                    issued_for: rev.clone(),
                    head: self.head.clone(),
                },
                _ => StoreError::UnknownDigest(digest.to_string()),
            });
        };
        let next = apply_plan(self.head_model(), &plan)?;
        let revision = next.revision();
        write_revision(&self.dir, &revision, &next)?;
        let entry = HistoryEntry {
            revision: revision.clone(),
            parent: self.head.clone(),
            finding: plan.finding.clone(),
            label: plan.label.clone(),
            digest: plan.digest.clone(),
            plan,
        };
        let mut history = self.history.clone();
        history.push(entry);
        write_json(&self.dir.join("history.json"), &history)?;
        self.history = history;
        self.revisions.insert(revision.clone(), next);
        self.head = revision;
        Ok(self.history.last().expect("just pushed"))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, serde_json::to_vec_pretty(value)?)?;
    fs::rename(tmp, path)?;
    Ok(())
}

fn write_revision(dir: &Path, revision: &str, model: &GoalModel) -> Result<(), StoreError> {
    let path = dir.join("revisions").join(format!("{revision}.json"));
    if !path.exists() {
        fs::write(path, to_document_json(model))?;
    }
    Ok(())
}

/// All sessions, each behind its own lock so applies on one session are
/// serialized while other sessions proceed.
pub struct SessionStore {
    root: PathBuf,
    sessions: RwLock<HashMap<Uuid, Arc<Mutex<Session>>>>,
}

impl SessionStore {
    /// Opens (or creates) a store rooted at `root`, loading any sessions
    /// already on disk.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&root)? {
            let dir = entry?.path();
            if dir.join("session.json").is_file() {
                let s = load_session(&dir)?;
                sessions.insert(s.id, Arc::new(Mutex::new(s)));
            }
        }
        Ok(Self {
            root,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn create(
        &self,
        model: GoalModel,
        kb: KnowledgeBase,
        kb_source: String,
        cap: usize,
    ) -> Result<Arc<Mutex<Session>>, StoreError> {
        let id = Uuid::new_v4();
        let dir = self.root.join(id.to_string());
        fs::create_dir_all(dir.join("revisions"))?;
        let initial = model.revision();
        write_revision(&dir, &initial, &model)?;
        write_json(
            &dir.join("session.json"),
            &SessionMeta {
                id,
                cap,
                kb_source: kb_source.clone(),
                initial: initial.clone(),
            },
        )?;
        write_json(&dir.join("history.json"), &Vec::<HistoryEntry>::new())?;
        let session = Arc::new(Mutex::new(Session {
            id,
            cap,
            kb,
            kb_source,
            initial: initial.clone(),
            head: initial.clone(),
            revisions: HashMap::from([(initial, model)]),
            history: Vec::new(),
            issued: HashMap::new(),
            dir,
        }));
        self.sessions.write().insert(id, session.clone());
        Ok(session)
    }

    pub fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, StoreError> {
        Uuid::parse_str(id)
            .ok()
            .and_then(|uuid| self.sessions.read().get(&uuid).cloned())
            .ok_or_else(|| StoreError::UnknownSession(id.to_string()))
    }
}

fn load_session(dir: &Path) -> Result<Session, StoreError> {
    let meta: SessionMeta = serde_json::from_slice(&fs::read(dir.join("session.json"))?)?;
    let history: Vec<HistoryEntry> = serde_json::from_slice(&fs::read(dir.join("history.json"))?)?;
    let kb = afscr_core::parse_kb(&meta.kb_source)?;
    let mut revisions = HashMap::new();
    for entry in fs::read_dir(dir.join("revisions"))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let model = afscr_core::from_document_json(&fs::read_to_string(&path)?)?;
            revisions.insert(model.revision(), model);
        }
    }
    let head = history
        .last()
        .map_or(meta.initial.clone(), |h| h.revision.clone());
    if !revisions.contains_key(&head) {
        return Err(StoreError::UnknownRevision(head));
    }
    let mut issued = HashMap::new();
    for h in &history {
        issued.insert(h.digest.clone(), h.parent.clone());
    }
    Ok(Session {
        id: meta.id,
        cap: meta.cap,
        kb,
        kb_source: meta.kb_source,
        initial: meta.initial,
        head,
        revisions,
        history,
        issued,
        dir: dir.to_path_buf(),
    })
}
