use std::path::Path;
use std::time::Duration;

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use noveltyforge::bundled;
use noveltyforge::filter::FilterConfig;
use noveltyforge::pipeline;
use noveltyforge::service::{router, AppState, ServiceConfig};
use noveltyforge::session::{BatchFile, Session};
use noveltyforge::transform::{constant_at, GeneratorConfig, NoveltyRecord, Params, Status, Transformation, TransformationKind};
use noveltyforge::tsal::StructuralDiff;

fn config() -> ServiceConfig {
    ServiceConfig {
        filter: FilterConfig {
            episodes: 4,
            max_steps: 60,
            ..FilterConfig::default()
        },
        ..ServiceConfig::default()
    }
}

fn app(dir: &Path) -> Router {
    router(AppState::new(Session::open(dir), config()))
}

fn seeded(dir: &Path, cfg: GeneratorConfig) -> Session {
    let s = Session::open(dir);
    pipeline::install_base(&s, bundled::BOARD_LITE, bundled::BOARD_LITE_P1).unwrap();
    pipeline::generate(&s, &cfg, None).unwrap();
    s
}

fn gen(seed: u64, count: usize) -> GeneratorConfig {
    GeneratorConfig {
        seed,
        batch_size: count,
        ..GeneratorConfig::default()
    }
}

struct Reply {
    status: StatusCode,
    etag: Option<String>,
    body: Value,
    text: String,
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, if_match: Option<&str>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(v) = if_match {
        req = req.header(header::IF_MATCH, v);
    }
    let req = match body {
        Some(b) => req
            .header(header::CONTENT_TYPE, "application/json")
            .body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let etag = res
        .headers()
        .get(header::ETAG)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    Reply {
        status,
        etag,
        body: serde_json::from_str(&text).unwrap_or(Value::Null),
        text,
    }
}

async fn wait_job(app: &Router, job: &str) -> Value {
    for _ in 0..600 {
        let r = call(app, "GET", &format!("/api/job/{job}"), None, None).await;
        assert_eq!(r.status, StatusCode::OK);
        if r.body["status"] != "pending" {
            return r.body;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    panic!("job {job} did not finish");
}

/// Adds a record whose models equal the base, bypassing the generator
/// (which never emits identity novelties).
fn add_identity_record(s: &Session) -> String {
    let (d, p) = s.base_text().unwrap();
    let mut batch = s.batch().unwrap();
    let record = NoveltyRecord {
        id: "1de7171de7171de7".into(),
        slot: 999,
        seed: 0,
        transformations: vec![Transformation::new(
            TransformationKind::PerturbNumericConstant,
            "event/pass-go/effect/1/value",
            Params::constant(200.0),
        )],
        diff: StructuralDiff::default(),
        domain: d,
        problem: p,
        status: Status::Generated,
        parent: None,
        report: None,
    };
    batch.records.push(record.clone());
    s.save_batch(&batch).unwrap();
    record.id
}

/// A generated perturbation of the pass-go reward.
fn pass_go_record(s: &Session) -> NoveltyRecord {
    let (d, _) = s.base().unwrap();
    s.batch()
        .unwrap()
        .records
        .into_iter()
        .find(|r| r.target().starts_with("event/pass-go/") && constant_at(&d, r.target()) == Some(200.0))
        .expect("a pass-go reward perturbation")
}

#[tokio::test]
async fn empty_session_lists_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let r = call(&app(dir.path()), "GET", "/api/batch", None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["novelties"], json!([]));
    assert_eq!(r.body["version"], 0);
}

#[tokio::test]
async fn fresh_batch_lists_all_generated() {
    let dir = tempfile::tempdir().unwrap();
    seeded(dir.path(), gen(42, 100));
    let r = call(&app(dir.path()), "GET", "/api/batch", None, None).await;
    let list = r.body["novelties"].as_array().unwrap();
    assert_eq!(list.len(), 100);
    assert!(list.iter().all(|n| n["status"] == "generated"));
    assert!(list.iter().all(|n| n.get("level").is_none()));
    assert_eq!(r.etag.as_deref(), Some("\"0\""));
}

#[tokio::test]
async fn novelty_detail_and_missing_ids() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(3, 6));
    let id = s.batch().unwrap().records[0].id.clone();
    let app = app(dir.path());
    let r = call(&app, "GET", &format!("/api/novelty/{id}"), None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["record"]["id"], json!(id));
    assert!(r.body["record"].get("report").is_none());
    assert_eq!(r.body["base"]["domain"], json!(s.base_text().unwrap().0));
    assert_eq!(r.body["lineage"], json!([id]));
    let r = call(&app, "GET", "/api/novelty/0000000000000000", None, None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    assert_eq!(r.body["error"]["code"], "UNKNOWN_ID");
    let r = call(&app, "GET", "/api/nothing-here", None, None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn annotations_are_versioned_and_persist() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(3, 4));
    let ids: Vec<String> = s.batch().unwrap().records.iter().map(|r| r.id.clone()).collect();
    let app1 = app(dir.path());
    let uri = |id: &str| format!("/api/novelty/{id}/annotation");

    let r = call(&app1, "POST", &uri(&ids[0]), Some(json!({"status": "accepted", "note": "keep"})), Some("\"0\"")).await;
    assert_eq!(r.status, StatusCode::OK);
    assert_eq!(r.body["version"], 1);
    assert_eq!(r.etag.as_deref(), Some("\"1\""));

    let r = call(&app1, "POST", &uri(&ids[1]), Some(json!({"status": "rejected"})), Some("\"0\"")).await;
    assert_eq!(r.status, StatusCode::CONFLICT);
    assert_eq!(r.body["error"]["code"], "VERSION_CONFLICT");

    let r = call(&app1, "POST", &uri(&ids[1]), Some(json!({"status": "rejected"})), Some("1")).await;
    assert_eq!(r.status, StatusCode::OK);

    let r = call(&app1, "POST", &uri(&ids[2]), Some(json!({"status": "generated"})), None).await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    let r = call(&app1, "POST", &uri("ffffffffffffffff"), Some(json!({"status": "accepted"})), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);

    let batch1 = call(&app1, "GET", "/api/batch", None, None).await;
    let statuses: Vec<&Value> = batch1.body["novelties"].as_array().unwrap().iter().map(|n| &n["status"]).collect();
    assert_eq!(statuses, vec!["accepted", "rejected", "generated", "generated"]);
    let detail1 = call(&app1, "GET", &format!("/api/novelty/{}", ids[0]), None, None).await;
    assert_eq!(detail1.body["status"], "accepted");
    assert_eq!(detail1.body["annotation"]["note"], "keep");

    // A fresh service over the same directory answers identically.
    let app2 = app(dir.path());
    let batch2 = call(&app2, "GET", "/api/batch", None, None).await;
    let detail2 = call(&app2, "GET", &format!("/api/novelty/{}", ids[0]), None, None).await;
    assert_eq!(batch2.text, batch1.text);
    assert_eq!(detail2.text, detail1.text);
}

#[tokio::test]
async fn revise_builds_a_lineage_chain() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = gen(11, 40);
    cfg.weights = GeneratorConfig::only(TransformationKind::PerturbNumericConstant);
    let s = seeded(dir.path(), cfg);
    let original = pass_go_record(&s);
    let app = app(dir.path());

    let r = call(
        &app,
        "POST",
        &format!("/api/novelty/{}/revise", original.id),
        Some(json!({"overrides": {"constant": 1000}})),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let first = r.body["id"].as_str().unwrap().to_string();
    assert_eq!(r.body["lineage"], json!([first, original.id]));
    let detail = call(&app, "GET", &format!("/api/novelty/{first}"), None, None).await;
    let diff = detail.body["record"]["diff"].as_array().unwrap();
    assert_eq!(diff.len(), 1);
    assert_eq!(diff[0]["before"], "200");
    assert_eq!(diff[0]["after"], "1000");

    let r = call(
        &app,
        "POST",
        &format!("/api/novelty/{first}/revise"),
        Some(json!({"overrides": {"constant": "500"}})),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::CREATED);
    let second = r.body["id"].as_str().unwrap().to_string();
    assert_eq!(r.body["lineage"], json!([second, first, original.id]));
    assert_eq!(r.body["record"]["diff"][0]["after"], "500");
    assert_eq!(r.body["record"]["status"], "revised");

    let r = call(
        &app,
        "POST",
        &format!("/api/novelty/{first}/revise"),
        Some(json!({"overrides": {"bogus": 1}})),
        None,
    )
    .await;
    assert_eq!(r.status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(r.body["error"]["code"], "INVALID_OVERRIDE");
    assert_eq!(r.body["error"]["valid_keys"], json!(["constant", "0.constant"]));

    let r = call(&app, "POST", "/api/novelty/ffffffffffffffff/revise", Some(json!({})), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn filter_job_reports_identity_as_inert() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(3, 2));
    let id = add_identity_record(&s);
    let app = app(dir.path());
    let r = call(&app, "POST", "/api/filter", Some(json!({"ids": [id]})), None).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    let job = wait_job(&app, r.body["job"].as_str().unwrap()).await;
    assert_eq!(job["status"], "done", "{job}");
    let report = &job["result"][0]["report"];
    assert_eq!(report["level"], "none");
    assert_eq!(report["relevant"], false);
    assert_eq!(report["noticeable"], false);
    assert_eq!(report["controllable"], false);

    let persisted = call(&app, "GET", &format!("/api/novelty/{id}"), None, None).await;
    assert_eq!(&persisted.body["record"]["report"], report);
    let listed = call(&app, "GET", "/api/batch", None, None).await;
    let entry = listed.body["novelties"].as_array().unwrap().iter().find(|n| n["id"] == json!(id)).unwrap().clone();
    assert_eq!(entry["level"], "none");
}

#[tokio::test]
async fn filter_rejects_unknown_ids_immediately() {
    let dir = tempfile::tempdir().unwrap();
    seeded(dir.path(), gen(3, 2));
    let app = app(dir.path());
    let r = call(&app, "POST", "/api/filter", Some(json!({"ids": ["nope"]})), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, "GET", "/api/job/job-999", None, None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn concurrent_filter_jobs_on_disjoint_ids() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(8, 6));
    let ids: Vec<String> = s.batch().unwrap().records.iter().map(|r| r.id.clone()).collect();
    let app = app(dir.path());
    let a = call(&app, "POST", "/api/filter", Some(json!({"ids": ids[..3]})), None).await;
    let b = call(&app, "POST", "/api/filter", Some(json!({"ids": ids[3..]})), None).await;
    let ja = wait_job(&app, a.body["job"].as_str().unwrap()).await;
    let jb = wait_job(&app, b.body["job"].as_str().unwrap()).await;
    assert_eq!(ja["status"], "done");
    assert_eq!(jb["status"], "done");

    // Each report matches a solo evaluation of the same record.
    let (d, p) = s.base().unwrap();
    let cfg = config().filter;
    for job in [&ja, &jb] {
        for outcome in job["result"].as_array().unwrap() {
            let id = outcome["id"].as_str().unwrap();
            let r = s.batch().unwrap().get(id).unwrap().clone();
            let (nd, np) = r.replay(&d, &p).unwrap();
            let solo = noveltyforge::filter::evaluate((&d, &p), (&nd, &np), &cfg).unwrap();
            assert_eq!(outcome["report"], serde_json::to_value(&solo).unwrap());
            assert_eq!(s.report(id).unwrap().unwrap(), solo);
        }
    }
}

#[tokio::test]
async fn filter_config_errors_fail_the_job() {
    let dir = tempfile::tempdir().unwrap();
    seeded(dir.path(), gen(3, 2));
    let app = app(dir.path());
    let r = call(&app, "POST", "/api/filter", Some(json!({"config": {"episodes": 1}})), None).await;
    let job = wait_job(&app, r.body["job"].as_str().unwrap()).await;
    assert_eq!(job["status"], "failed");
    assert_eq!(job["error"]["code"], "CONFIG_ERROR");
}

#[tokio::test]
async fn regeneration_keeps_reviewed_records() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(1, 10));
    let ids: Vec<String> = s.batch().unwrap().records.iter().map(|r| r.id.clone()).collect();
    let app = app(dir.path());
    call(&app, "POST", &format!("/api/novelty/{}/annotation", ids[0]), Some(json!({"status": "accepted"})), None).await;
    call(&app, "POST", &format!("/api/novelty/{}/annotation", ids[1]), Some(json!({"status": "rejected"})), None).await;

    let r = call(&app, "POST", "/api/generate", Some(json!({"config": {"seed": 2}})), None).await;
    assert_eq!(r.status, StatusCode::ACCEPTED);
    let job = wait_job(&app, r.body["job"].as_str().unwrap()).await;
    assert_eq!(job["status"], "done", "{job}");
    assert_eq!(job["result"]["kept"], 2);

    let after: BatchFile = s.batch().unwrap();
    let (d, p) = s.base().unwrap();
    let fresh = noveltyforge::transform::generate_batch(&d, &p, &gen(2, 10)).unwrap();
    let mut expected: Vec<String> = ids[..2].to_vec();
    expected.extend(fresh.records.iter().map(|r| r.id.clone()).filter(|id| !ids[..2].contains(id)));
    let got: Vec<String> = after.records.iter().map(|r| r.id.clone()).collect();
    assert_eq!(got, expected);
    let listed = call(&app, "GET", "/api/batch", None, None).await;
    assert_eq!(listed.body["novelties"][0]["status"], "accepted");
    assert_eq!(listed.body["novelties"][1]["status"], "rejected");
    assert_eq!(listed.body["generator"]["seed"], 2);

    // Same seed again: nothing changes.
    let before = std::fs::read(dir.path().join("batch.json")).unwrap();
    let r = call(&app, "POST", "/api/generate", Some(json!({"config": {"seed": 2}})), None).await;
    assert_eq!(wait_job(&app, r.body["job"].as_str().unwrap()).await["status"], "done");
    assert_eq!(std::fs::read(dir.path().join("batch.json")).unwrap(), before);
}

#[tokio::test]
async fn zero_weights_fail_the_generate_job() {
    let dir = tempfile::tempdir().unwrap();
    seeded(dir.path(), gen(1, 3));
    let app = app(dir.path());
    let zeros: serde_json::Map<String, Value> = TransformationKind::ALL.iter().map(|k| (k.tag().to_string(), json!(0))).collect();
    let r = call(&app, "POST", "/api/generate", Some(json!({"config": {"weights": zeros}})), None).await;
    let job = wait_job(&app, r.body["job"].as_str().unwrap()).await;
    assert_eq!(job["status"], "failed");
    assert_eq!(job["error"]["code"], "CONFIG_ERROR");
    assert_eq!(job["kind"], "generate");
}

#[tokio::test]
async fn api_never_touches_base_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = seeded(dir.path(), gen(1, 4));
    let before = s.base_text().unwrap();
    let id = s.batch().unwrap().records[0].id.clone();
    let app = app(dir.path());
    call(&app, "POST", &format!("/api/novelty/{id}/annotation"), Some(json!({"status": "accepted"})), None).await;
    let r = call(&app, "POST", "/api/generate", Some(json!({"config": {"seed": 9}})), None).await;
    wait_job(&app, r.body["job"].as_str().unwrap()).await;
    assert_eq!(s.base_text().unwrap(), before);
}

#[tokio::test]
async fn root_serves_placeholder_or_static_assets() {
    let dir = tempfile::tempdir().unwrap();
    let r = call(&app(dir.path()), "GET", "/", None, None).await;
    assert_eq!(r.status, StatusCode::OK);
    assert!(r.text.contains("/api/batch"));

    let assets = tempfile::tempdir().unwrap();
    std::fs::write(assets.path().join("index.html"), "<p>ui</p>").unwrap();
    std::fs::write(assets.path().join("app.js"), "console.log(1)").unwrap();
    let app = router(AppState::new(
        Session::open(dir.path()),
        ServiceConfig {
            static_dir: Some(assets.path().to_path_buf()),
            ..config()
        },
    ));
    assert_eq!(call(&app, "GET", "/", None, None).await.text, "<p>ui</p>");
    assert_eq!(call(&app, "GET", "/app.js", None, None).await.text, "console.log(1)");
    assert_eq!(call(&app, "GET", "/api/batch", None, None).await.status, StatusCode::OK);
}
