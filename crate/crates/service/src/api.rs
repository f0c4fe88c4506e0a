use std::collections::BTreeMap;
use std::sync::Arc;

use afscr_core::{
    analyze, parse_kb, parse_model, serialize_model, validate_model, ConflictReport, Diagnostic,
    Finding, GoalModel, KnowledgeBase, ModelDocument, RefactoringPlan, DEFAULT_CAP,
};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::store::{HistoryEntry, SessionStore, StoreError};

pub type AppState = Arc<SessionStore>;

pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/findings", get(findings))
        .route("/sessions/{id}/model", get(model))
        .route("/sessions/{id}/apply", post(apply))
        .route("/sessions/{id}/history", get(history))
        .with_state(store)
}

#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    BadRequest(String),
}

impl From<afscr_core::Error> for ApiError {
    fn from(e: afscr_core::Error) -> Self {
        ApiError::Store(StoreError::Engine(e))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        use afscr_core::Error as E;
        let message = self.to_string();
        let (status, code, extra) = match &self {
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad-request", json!({})),
            ApiError::Store(s) => match s {
                StoreError::UnknownSession(_) => {
                    (StatusCode::NOT_FOUND, "unknown-session", json!({}))
                }
                StoreError::UnknownRevision(_) => {
                    (StatusCode::NOT_FOUND, "unknown-revision", json!({}))
                }
                StoreError::UnknownDigest(_) => {
                    (StatusCode::NOT_FOUND, "unknown-digest", json!({}))
                }
                StoreError::Stale { head, .. } => (
                    StatusCode::CONFLICT,
                    "stale-revision",
                    json!({ "head": head }),
                ),
                StoreError::Engine(E::Parse { line, column, .. }) => (
                    StatusCode::BAD_REQUEST,
                    "parse",
                    json!({ "line": line, "column": column }),
                ),
                StoreError::Engine(E::Invalid(diags)) => (
                    StatusCode::BAD_REQUEST,
                    "invalid-model",
                    json!({ "diagnostics": diags }),
                ),
                StoreError::Engine(E::StaleRevision { actual, .. }) => (
                    StatusCode::CONFLICT,
                    "stale-revision",
                    json!({ "head": actual }),
                ),
                StoreError::Engine(E::CapExceeded { cap, at }) => (
                    StatusCode::UNPROCESSABLE_ENTITY,
                    "cap-exceeded",
                    json!({ "cap": cap, "at": at }),
                ),
                StoreError::Engine(_) => (StatusCode::BAD_REQUEST, "engine", json!({})),
                StoreError::Io(_) | StoreError::Encoding(_) => {
                    (StatusCode::INTERNAL_SERVER_ERROR, "storage", json!({}))
                }
            },
        };
        let mut body = json!({ "error": code, "message": message });
        if let (Value::Object(b), Value::Object(x)) = (&mut body, extra) {
            b.extend(x);
        }
        (status, Json(body)).into_response()
    }
}

/// `model` is either DSL source text or a structured model document.
#[derive(Deserialize)]
pub struct CreateSession {
    pub model: Value,
    #[serde(default)]
    pub kb: String,
    pub cap: Option<usize>,
}

#[derive(Serialize)]
pub struct InputWarning {
    pub kind: &'static str,
    pub atom: String,
    pub message: String,
}

fn load_model(v: Value) -> Result<GoalModel, ApiError> {
    let model = match v {
        Value::String(src) => parse_model(&src)?,
        doc @ Value::Object(_) => {
            let doc: ModelDocument =
                serde_json::from_value(doc).map_err(|e| ApiError::BadRequest(e.to_string()))?;
            GoalModel::try_from(doc)?
        }
        _ => {
            return Err(ApiError::BadRequest(
                "`model` must be DSL text or a model document".into(),
            ))
        }
    };
    let diags: Vec<Diagnostic> = validate_model(&model);
    if !diags.is_empty() {
        return Err(afscr_core::Error::Invalid(diags).into());
    }
    Ok(model)
}

/// KB atoms that no artefact mentions; harmless but usually a typo.
fn unknown_atoms(model: &GoalModel, kb: &KnowledgeBase) -> Vec<InputWarning> {
    let mut used = std::collections::BTreeSet::new();
    for a in model.artefacts.values() {
        for l in a.ie.all_literals().iter() {
            used.insert(l.atom.clone());
        }
    }
    kb.atoms()
        .into_iter()
        .filter(|a| !used.contains(a))
        .map(|atom| InputWarning {
            kind: "unknown-atom",
            message: format!("knowledge-base atom `{atom}` does not occur in the model"),
            atom,
        })
        .collect()
}

async fn create_session(
    State(store): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<Response, ApiError> {
    let model = load_model(req.model)?;
    let kb = parse_kb(&req.kb)?;
    let cap = req.cap.unwrap_or(DEFAULT_CAP);
    if cap == 0 {
        return Err(ApiError::BadRequest("cap must be at least 1".into()));
    }
    let (_, report) = analyze(&model, &kb, cap)?;
    let warnings = unknown_atoms(&model, &kb);
    let session = store.create(model, kb, req.kb, cap)?;
    let s = session.lock();
    let body = json!({
        "session": s.id,
        "revision": s.head,
        "report": report,
        "warnings": warnings,
    });
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

#[derive(Serialize)]
pub struct PlanSummary {
    pub label: String,
    pub digest: String,
    pub edits: Vec<afscr_core::Edit>,
    pub preview: Vec<String>,
}

impl From<RefactoringPlan> for PlanSummary {
    fn from(p: RefactoringPlan) -> Self {
        Self {
            preview: p.edits.iter().map(ToString::to_string).collect(),
            label: p.label,
            digest: p.digest,
            edits: p.edits,
        }
    }
}

#[derive(Serialize)]
pub struct FindingWithPlans {
    #[serde(flatten)]
    pub finding: Finding,
    pub plans: Vec<PlanSummary>,
}

async fn findings(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = store.get(&id)?;
    let mut s = session.lock();
    let report = s.analyze(&s.head.clone())?;
    let findings: Vec<FindingWithPlans> = s
        .plans()?
        .into_iter()
        .map(|(finding, plans)| FindingWithPlans {
            finding,
            plans: plans.into_iter().map(PlanSummary::from).collect(),
        })
        .collect();
    Ok(Json(json!({
        "session": s.id,
        "revision": s.head,
        "findings": findings,
        "warnings": report.warnings,
    })))
}

#[derive(Deserialize)]
pub struct ModelQuery {
    pub rev: Option<String>,
}

fn annotations(
    model: &GoalModel,
    kb: &KnowledgeBase,
    cap: usize,
) -> (Value, Option<ConflictReport>) {
    match analyze(model, kb, cap) {
        Ok((ann, report)) => {
            let mut per: BTreeMap<&str, Value> = BTreeMap::new();
            for a in model.artefacts.values() {
                let conflict = report.findings.iter().any(|f| f.at == a.id);
                per.insert(
                    &a.id,
                    json!({
                        "ie": a.ie.to_string(),
                        "ce": ann.ce(&a.id).map(|c| c.iter().map(ToString::to_string).collect::<Vec<_>>()),
                        "conflict": conflict,
                        "temp": a.temp,
                    }),
                );
            }
            (json!(per), Some(report))
        }
        Err(e) => (json!({ "error": e.to_string() }), None),
    }
}

/// Node depths (longest path from a root) and edges for drawing.
fn layout(model: &GoalModel) -> Value {
    let mut depth: BTreeMap<&str, usize> = BTreeMap::new();
    let mut stack: Vec<(&str, usize)> = model.roots().into_iter().map(|r| (r, 0)).collect();
    while let Some((n, d)) = stack.pop() {
        if depth.get(n).is_some_and(|&old| old >= d) {
            continue;
        }
        depth.insert(n, d);
        for c in model.children(n) {
            stack.push((c, d + 1));
        }
    }
    let nodes: Vec<Value> = model
        .artefacts
        .values()
        .map(|a| {
            json!({
                "id": a.id,
                "actor": a.actor,
                "kind": a.kind,
                "temp": a.temp,
                "depth": depth.get(a.id.as_str()).copied().unwrap_or(0),
            })
        })
        .collect();
    let mut edges: Vec<Value> = Vec::new();
    for link in model.decompositions.values() {
        for c in &link.children {
            edges.push(json!({ "from": link.parent, "to": c, "kind": link.kind }));
        }
    }
    for d in &model.dependencies {
        edges.push(
            json!({ "from": d.depender.artefact, "to": d.dependee.artefact, "kind": "depends" }),
        );
    }
    json!({ "nodes": nodes, "edges": edges })
}

async fn model(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ModelQuery>,
) -> Result<Json<Value>, ApiError> {
    let session = store.get(&id)?;
    let s = session.lock();
    let revision = q.rev.unwrap_or_else(|| s.head.clone());
    let m = s.model(&revision)?;
    let (annotations, report) = annotations(m, &s.kb, s.cap);
    Ok(Json(json!({
        "session": s.id,
        "revision": revision,
        "head": revision == s.head,
        "document": ModelDocument::from(m),
        "source": serialize_model(m),
        "annotations": annotations,
        "findings": report.map(|r| r.findings.into_iter().map(|f| f.id).collect::<Vec<_>>()),
        "layout": layout(m),
    })))
}

#[derive(Deserialize)]
pub struct ApplyRequest {
    pub finding: String,
    pub digest: String,
}

async fn apply(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ApplyRequest>,
) -> Result<Json<Value>, ApiError> {
    let session = store.get(&id)?;
    let mut s = session.lock();
    let entry: HistoryEntry = s.apply(&req.finding, &req.digest)?.clone();
    let report = s.analyze(&entry.revision)?;
    Ok(Json(json!({
        "session": s.id,
        "revision": entry.revision,
        "parent": entry.parent,
        "applied": { "finding": entry.finding, "label": entry.label, "digest": entry.digest },
        "report": report,
    })))
}

async fn history(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<Value>, ApiError> {
    let session = store.get(&id)?;
    let s = session.lock();
    Ok(Json(json!({
        "session": s.id,
        "initial": s.initial,
        "head": s.head,
        "entries": s.history,
    })))
}
