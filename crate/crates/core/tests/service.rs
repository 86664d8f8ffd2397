//! Rating service driven in-process through the router.

use std::path::Path;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use prisk::pipeline::service::router;
use prisk::scenario::{
    generate_synthetic, load_scenario, load_trace, merge_ratings, save_scenario, GenParams, RatingSource, Template,
};
use serde_json::{json, Value};
use tower::ServiceExt;

const SCENARIO: &str = "lead_brake_7";

fn workspace() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    let params = GenParams {
        duration: 10.0,
        ..Template::LeadBrake.default_params()
    };
    let log = generate_synthetic(Template::LeadBrake, &params, 7).unwrap();
    assert_eq!(log.name(), SCENARIO);
    save_scenario(&log, tmp.path().join("scenarios").join(format!("{SCENARIO}.jsonl"))).unwrap();
    tmp
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or(Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

async fn open(app: &Router, rater: &str) -> String {
    let (status, body) = call(app, Method::POST, "/sessions", Some(json!({"rater_id": rater, "scenario": SCENARIO}))).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

async fn rate(app: &Router, id: &str, frame: i64, level: i64) -> StatusCode {
    call(
        app,
        Method::POST,
        &format!("/sessions/{id}/ratings"),
        Some(json!({"frame": frame, "level": level})),
    )
    .await
    .0
}

fn scenario_bytes(root: &Path) -> Vec<u8> {
    std::fs::read(root.join("scenarios").join(format!("{SCENARIO}.jsonl"))).unwrap()
}

#[tokio::test]
async fn full_session_writes_a_mergeable_trace() {
    let tmp = workspace();
    let before = scenario_bytes(tmp.path());
    let app = router(tmp.path()).unwrap();

    let id = open(&app, "r01").await;
    let (status, state) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(state["status"], "active");
    assert_eq!(state["scenario_name"], SCENARIO);
    assert_eq!(state["frame_count"], 100);

    assert_eq!(rate(&app, &id, 0, 1).await, StatusCode::OK);
    assert_eq!(rate(&app, &id, 40, 3).await, StatusCode::OK);
    // retry of the latest rating is acknowledged without a duplicate
    assert_eq!(rate(&app, &id, 40, 3).await, StatusCode::OK);
    let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(state["ratings"].as_array().unwrap().len(), 2);
    assert_eq!(state["cursor"], 40);

    let (status, done) = call(&app, Method::POST, &format!("/sessions/{id}/complete"), None).await;
    assert_eq!(status, StatusCode::OK, "{done}");
    assert_eq!(done["status"], "complete");

    let trace = load_trace(tmp.path().join("ratings").join(SCENARIO).join("r01.jsonl")).unwrap();
    assert_eq!(trace.source(), RatingSource::Human);
    let log = load_scenario(tmp.path().join("scenarios").join(format!("{SCENARIO}.jsonl"))).unwrap();
    let ds = merge_ratings(&log, &[trace]).unwrap();
    let col = ds.column("r01").unwrap();
    assert_eq!(ds.rows().count(), 100);
    assert_eq!(col[39].unwrap().get(), 1);
    assert_eq!(col[40].unwrap().get(), 3);
    assert_eq!(col[99].unwrap().get(), 3);

    assert_eq!(scenario_bytes(tmp.path()), before);
}

#[tokio::test]
async fn out_of_range_ratings_are_422() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let id = open(&app, "r02").await;
    assert_eq!(rate(&app, &id, 3, 5).await, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rate(&app, &id, 3, -1).await, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rate(&app, &id, 100, 2).await, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rate(&app, &id, 10, 2).await, StatusCode::OK);
    assert_eq!(rate(&app, &id, 10, 4).await, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(rate(&app, &id, 5, 4).await, StatusCode::UNPROCESSABLE_ENTITY);
    let (_, state) = call(&app, Method::GET, &format!("/sessions/{id}"), None).await;
    assert_eq!(state["ratings"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn finished_sessions_reject_changes_with_409() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let id = open(&app, "r03").await;
    assert_eq!(rate(&app, &id, 0, 2).await, StatusCode::OK);
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/complete"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(rate(&app, &id, 50, 2).await, StatusCode::CONFLICT);
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/complete"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    // a second session for the same rater and scenario would overwrite the trace
    let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({"rater_id": "r03", "scenario": SCENARIO}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn abandoned_sessions_write_nothing() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let id = open(&app, "r04").await;
    assert_eq!(rate(&app, &id, 0, 2).await, StatusCode::OK);
    let (status, body) = call(&app, Method::POST, &format!("/sessions/{id}/abandon"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "abandoned");
    assert_eq!(rate(&app, &id, 5, 2).await, StatusCode::CONFLICT);
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/complete"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(!tmp.path().join("ratings").join(SCENARIO).join("r04.jsonl").exists());
}

#[tokio::test]
async fn empty_session_cannot_complete() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let id = open(&app, "r05").await;
    let (status, _) = call(&app, Method::POST, &format!("/sessions/{id}/complete"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn unknown_sessions_and_scenarios_are_404() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let (status, _) = call(&app, Method::GET, "/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(rate(&app, "nope", 0, 1).await, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/sessions/nope/complete", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({"rater_id": "r", "scenario": "missing"}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, Method::GET, "/scenarios/missing/frames", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn invalid_rater_ids_are_422() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    for bad in ["", "../etc", "a b"] {
        let (status, _) = call(&app, Method::POST, "/sessions", Some(json!({"rater_id": bad, "scenario": SCENARIO}))).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{bad:?}");
    }
}

#[tokio::test]
async fn concurrent_sessions_are_isolated() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let a = open(&app, "ra").await;
    let b = open(&app, "rb").await;
    assert_ne!(a, b);
    assert_eq!(rate(&app, &a, 0, 4).await, StatusCode::OK);
    assert_eq!(rate(&app, &b, 0, 0).await, StatusCode::OK);
    assert_eq!(rate(&app, &b, 20, 1).await, StatusCode::OK);
    let (_, sa) = call(&app, Method::GET, &format!("/sessions/{a}"), None).await;
    let (_, sb) = call(&app, Method::GET, &format!("/sessions/{b}"), None).await;
    assert_eq!(sa["ratings"], json!([{"frame": 0, "level": 4}]));
    assert_eq!(sb["ratings"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn frames_are_served_in_pages() {
    let tmp = workspace();
    let app = router(tmp.path()).unwrap();
    let (status, list) = call(&app, Method::GET, "/scenarios", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(list[0]["name"], SCENARIO);
    assert_eq!(list[0]["frames"], 100);

    let (status, page) = call(&app, Method::GET, &format!("/scenarios/{SCENARIO}/frames?from=90&count=20"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(page["total"], 100);
    let frames = page["frames"].as_array().unwrap();
    assert_eq!(frames.len(), 10);
    let t0 = frames[0]["t"].as_f64().unwrap();
    assert!((t0 - 9.0).abs() < 1e-9, "{t0}");

    let (status, _) = call(&app, Method::GET, &format!("/scenarios/{SCENARIO}/frames?from=101"), None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn router_needs_scenarios() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(router(tmp.path()).is_err());
    std::fs::create_dir_all(tmp.path().join("scenarios")).unwrap();
    assert!(router(tmp.path()).is_err());
}
