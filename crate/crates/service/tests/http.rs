use std::path::PathBuf;
use std::sync::Arc;

use afscr_core::{apply_plan, from_document_json, parse_model, RefactoringPlan};
use afscr_service::{router, SessionStore};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

struct Harness {
    app: Router,
    dir: tempfile::TempDir,
}

impl Harness {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        Self {
            app: router(Arc::new(store)),
            dir,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        call(&self.app, method, uri, body).await
    }

    async fn session(&self, model: &str, kb: &str) -> (String, Value) {
        let (status, body) = self
            .call(
                "POST",
                "/sessions",
                Some(json!({ "model": fixture(&format!("{model}.goal")), "kb": kb })),
            )
            .await;
        assert_eq!(status, StatusCode::CREATED, "{body}");
        (body["session"].as_str().unwrap().to_string(), body)
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes)
            .unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

fn finding_ids(findings: &Value) -> Vec<String> {
    let mut ids: Vec<String> = findings
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["id"].as_str().unwrap().to_string())
        .collect();
    ids.sort();
    ids
}

fn digest_for(findings: &Value, id: &str, plan: usize) -> String {
    findings
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["id"] == id)
        .unwrap_or_else(|| panic!("no finding {id}"))["plans"][plan]["digest"]
        .as_str()
        .unwrap()
        .to_string()
}

#[tokio::test]
async fn healthcare_upload_is_clean() {
    let h = Harness::new();
    let (id, body) = h.session("healthcare", &fixture("healthcare.kb")).await;
    assert_eq!(body["report"]["findings"], json!([]));
    assert_eq!(body["warnings"], json!([]));
    let (status, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(f["findings"], json!([]));
}

#[tokio::test]
async fn malformed_dsl_reports_position() {
    let h = Harness::new();
    let (status, body) = h
        .call(
            "POST",
            "/sessions",
            Some(json!({ "model": "actor A \"a\" {\n  goal G \"g\" ie { p q };\n}" })),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "parse");
    assert_eq!(body["line"], 2);
    assert!(body["column"].as_u64().unwrap() > 0);
}

#[tokio::test]
async fn unknown_kb_atoms_are_warned_about() {
    let h = Harness::new();
    let (_, body) = h.session("case1", "rule p -> Phantom_Atom;").await;
    let warnings = body["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0]["kind"], "unknown-atom");
    assert_eq!(warnings[0]["atom"], "Phantom_Atom");
}

#[tokio::test]
async fn invalid_models_are_rejected_with_diagnostics() {
    let h = Harness::new();
    let src = "actor A \"a\" { goal G \"g\" ie { p }; and G -> X; }";
    let (status, body) = h
        .call("POST", "/sessions", Some(json!({ "model": src })))
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{body}");
}

#[tokio::test]
async fn sessions_accept_model_documents() {
    let h = Harness::new();
    let doc: Value = serde_json::from_str(&afscr_core::to_document_json(
        &parse_model(&fixture("case1.goal")).unwrap(),
    ))
    .unwrap();
    let (status, body) = h
        .call("POST", "/sessions", Some(json!({ "model": doc })))
        .await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["report"]["findings"][0]["id"], "entailment@G");
}

#[tokio::test]
async fn unknown_session_is_404() {
    let h = Harness::new();
    for uri in [
        "/sessions/not-a-uuid/findings",
        "/sessions/5b0c8a44-9d4e-4a7c-8d8e-000000000000/history",
    ] {
        let (status, _) = h.call("GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
    }
}

#[tokio::test]
async fn sibling_conflict_offers_two_plans() {
    let h = Harness::new();
    let (id, _) = h.session("figure16", "").await;
    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    let sibling: Vec<&Value> = f["findings"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|x| x["kind"] == "sibling")
        .collect();
    assert_eq!(sibling.len(), 1);
    let labels: Vec<&str> = sibling[0]["plans"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["label"].as_str().unwrap())
        .collect();
    assert_eq!(labels, ["Solution 1", "Solution 2"]);
    assert!(!sibling[0]["plans"][0]["preview"][0]
        .as_str()
        .unwrap()
        .is_empty());
}

#[tokio::test]
async fn healthcare_change_resolves_to_zero_findings() {
    let h = Harness::new();
    let (id, _) = h
        .session("healthcare_changed", &fixture("healthcare_changed.kb"))
        .await;
    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    assert_eq!(
        finding_ids(&f["findings"]),
        ["entailment@G3", "entailment@T1"]
    );

    // ERA-2 first: links T1 to R1 and clears the T1 finding.
    let digest = digest_for(&f["findings"], "entailment@T1", 0);
    let (status, applied) = h
        .call(
            "POST",
            &format!("/sessions/{id}/apply"),
            Some(json!({ "finding": "entailment@T1", "digest": digest })),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{applied}");
    let remaining: Vec<&str> = applied["report"]["findings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["id"].as_str().unwrap())
        .collect();
    assert_eq!(remaining, ["entailment@G3"]);
    let (_, m) = h.call("GET", &format!("/sessions/{id}/model"), None).await;
    let model = from_document_json(&m["document"].to_string()).unwrap();
    assert!(model.children("T1").contains(&"R1".to_string()));

    // Replaying the same digest is stale now.
    let (status, body) = h
        .call(
            "POST",
            &format!("/sessions/{id}/apply"),
            Some(json!({ "finding": "entailment@T1", "digest": digest })),
        )
        .await;
    assert_eq!(status, StatusCode::CONFLICT, "{body}");

    // ERA-1 on the new revision.
    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    let digest = digest_for(&f["findings"], "entailment@G3", 0);
    let (status, applied) = h
        .call(
            "POST",
            &format!("/sessions/{id}/apply"),
            Some(json!({ "finding": "entailment@G3", "digest": digest })),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(applied["report"]["findings"], json!([]));

    let (_, m) = h.call("GET", &format!("/sessions/{id}/model"), None).await;
    let temp = m["annotations"]
        .as_object()
        .unwrap()
        .iter()
        .find(|(_, a)| a["temp"] == true);
    let (temp_id, _) = temp.expect("a temporary artefact");
    assert!(model_children(&m, "G3").contains(temp_id));
    assert_eq!(m["findings"], json!([]));
}

fn model_children(m: &Value, parent: &str) -> Vec<String> {
    m["document"]["decompositions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|l| l["parent"] == parent)
        .map(|l| {
            l["children"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c.as_str().unwrap().to_string())
                .collect()
        })
        .unwrap_or_default()
}

#[tokio::test]
async fn unknown_digest_is_404() {
    let h = Harness::new();
    let (id, _) = h.session("case1", "").await;
    let (status, body) = h
        .call(
            "POST",
            &format!("/sessions/{id}/apply"),
            Some(json!({ "finding": "entailment@G", "digest": "00".repeat(32) })),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "unknown-digest");
}

#[tokio::test]
async fn model_revisions_are_addressable() {
    let h = Harness::new();
    let (id, created) = h.session("case1", "").await;
    let initial = created["revision"].as_str().unwrap().to_string();
    let (status, m) = h
        .call("GET", &format!("/sessions/{id}/model?rev={initial}"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(m["annotations"]["G"]["ce"].as_array().unwrap().len(), 2);
    assert_eq!(m["annotations"]["G"]["conflict"], true);
    assert_eq!(m["layout"]["nodes"].as_array().unwrap().len(), 8);

    let (status, _) = h
        .call(
            "GET",
            &format!("/sessions/{id}/model?rev={}", "ab".repeat(32)),
            None,
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    let digest = digest_for(&f["findings"], "entailment@G", 0);
    h.call(
        "POST",
        &format!("/sessions/{id}/apply"),
        Some(json!({ "finding": "entailment@G", "digest": digest })),
    )
    .await;
    let (_, m) = h.call("GET", &format!("/sessions/{id}/model"), None).await;
    let temps: Vec<&Value> = m["document"]["artefacts"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|a| a["temp"] == true)
        .collect();
    assert!(!temps.is_empty());
    let (status, old) = h
        .call("GET", &format!("/sessions/{id}/model?rev={initial}"), None)
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(old["head"], false);
}

#[tokio::test]
async fn history_replays_to_the_head() {
    let h = Harness::new();
    let (id, _) = h
        .session("healthcare_changed", &fixture("healthcare_changed.kb"))
        .await;
    for _ in 0..2 {
        let (_, f) = h
            .call("GET", &format!("/sessions/{id}/findings"), None)
            .await;
        let first = &f["findings"][0];
        let (status, _) = h
            .call(
                "POST",
                &format!("/sessions/{id}/apply"),
                Some(json!({ "finding": first["id"], "digest": first["plans"][0]["digest"] })),
            )
            .await;
        assert_eq!(status, StatusCode::OK);
    }
    let (_, hist) = h
        .call("GET", &format!("/sessions/{id}/history"), None)
        .await;
    let entries = hist["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["parent"], hist["initial"]);
    assert_eq!(entries[1]["parent"], entries[0]["revision"]);
    assert_eq!(entries[1]["revision"], hist["head"]);

    let mut model = parse_model(&fixture("healthcare_changed.goal")).unwrap();
    assert_eq!(model.revision(), hist["initial"].as_str().unwrap());
    for e in entries {
        let plan: RefactoringPlan = serde_json::from_value(e["plan"].clone()).unwrap();
        assert_eq!(plan.digest, e["digest"].as_str().unwrap());
        model = apply_plan(&model, &plan).unwrap();
        assert_eq!(model.revision(), e["revision"].as_str().unwrap());
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_applies_have_one_winner() {
    let h = Harness::new();
    let (id, _) = h.session("figure16", "").await;
    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    let sibling = f["findings"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["kind"] == "sibling")
        .unwrap()
        .clone();
    let mut tasks = Vec::new();
    for plan in 0..2 {
        let app = h.app.clone();
        let uri = format!("/sessions/{id}/apply");
        let body = json!({ "finding": sibling["id"], "digest": sibling["plans"][plan]["digest"] });
        tasks.push(tokio::spawn(async move {
            call(&app, "POST", &uri, Some(body)).await.0
        }));
    }
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    statuses.sort();
    assert_eq!(statuses, [StatusCode::OK, StatusCode::CONFLICT]);
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let h = Harness::new();
    let (id, _) = h.session("case1", "").await;
    let (_, f) = h
        .call("GET", &format!("/sessions/{id}/findings"), None)
        .await;
    let digest = digest_for(&f["findings"], "entailment@G", 0);
    h.call(
        "POST",
        &format!("/sessions/{id}/apply"),
        Some(json!({ "finding": "entailment@G", "digest": digest })),
    )
    .await;
    let (_, before) = h
        .call("GET", &format!("/sessions/{id}/history"), None)
        .await;

    let reopened = router(Arc::new(SessionStore::open(h.dir.path()).unwrap()));
    let (status, after) = call(&reopened, "GET", &format!("/sessions/{id}/history"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(after, before);
    let (status, _) = call(
        &reopened,
        "POST",
        &format!("/sessions/{id}/apply"),
        Some(json!({ "finding": "entailment@G", "digest": digest })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);
}
