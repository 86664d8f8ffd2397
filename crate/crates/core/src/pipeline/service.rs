//! HTTP rating service. Raters replay a scenario and post keystroke ratings;
//! completed sessions are written as rating traces under
//! `<out>/ratings/<scenario>/<rater>.jsonl`.
//!
//! | method | path                                  | success | errors          |
//! |--------|---------------------------------------|---------|-----------------|
//! | POST   | `/sessions` `{rater_id, scenario}`    | 201     | 404, 409, 422   |
//! | GET    | `/sessions/{id}`                      | 200     | 404             |
//! | GET    | `/scenarios`                          | 200     |                 |
//! | GET    | `/scenarios/{name}/frames?from=&count=` | 200   | 404, 422        |
//! | POST   | `/sessions/{id}/ratings` `{frame, level}` | 200 | 404, 409, 422   |
//! | POST   | `/sessions/{id}/complete`             | 200     | 404, 409, 422   |
//! | POST   | `/sessions/{id}/abandon`              | 200     | 404, 409        |

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::commands::Layout;
use crate::scenario::{
    frame_to_json, load_scenario, save_trace, Level, Rating, RatingSource, RatingTrace, ScenarioLog,
};
use crate::{Error, Result, NUM_LEVELS};

/// Most frames returned by one frames request.
pub const MAX_FRAME_BATCH: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Complete,
    Abandoned,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionState {
    pub session_id: String,
    pub scenario_name: String,
    pub rater_id: String,
    pub frame_count: usize,
    /// Frame of the latest accepted rating (0 before any rating).
    pub cursor: usize,
    pub ratings: Vec<Rating>,
    pub status: SessionStatus,
}

struct AppState {
    scenarios: BTreeMap<String, Arc<ScenarioLog>>,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionState>>>>,
    layout: Layout,
}

type Shared = Arc<AppState>;

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

fn not_found(what: impl Into<String>) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, what.into())
}

fn conflict(what: impl Into<String>) -> ApiError {
    ApiError(StatusCode::CONFLICT, what.into())
}

fn unprocessable(what: impl Into<String>) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, what.into())
}

fn internal(e: Error) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

/// Loads every `*.jsonl` scenario under `<out>/scenarios` and builds the router.
pub fn router(out: impl Into<PathBuf>) -> Result<Router> {
    let layout = Layout::new(out);
    let dir = layout.scenario_dir();
    let mut scenarios = BTreeMap::new();
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    for p in paths {
        let log = load_scenario(&p)?;
        scenarios.insert(log.name().to_string(), Arc::new(log));
    }
    if scenarios.is_empty() {
        return Err(Error::Data(format!("no scenarios found in {}", dir.display())));
    }
    let state = Arc::new(AppState {
        scenarios,
        sessions: Mutex::new(HashMap::new()),
        layout,
    });
    Ok(Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/ratings", post(post_rating))
        .route("/sessions/{id}/complete", post(complete_session))
        .route("/sessions/{id}/abandon", post(abandon_session))
        .route("/scenarios", get(list_scenarios))
        .route("/scenarios/{name}/frames", get(get_frames))
        .with_state(state))
}

/// Binds `addr` and serves until interrupted.
pub async fn serve(out: impl Into<PathBuf>, addr: SocketAddr) -> Result<()> {
    let app = router(out)?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(format!("bind {addr}"), e))?;
    log::info!("rating service listening on {addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io("serve", e))
}

fn valid_rater_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

#[derive(Deserialize)]
struct CreateSession {
    rater_id: String,
    scenario: String,
}

fn session(state: &AppState, id: &str) -> ApiResult<Arc<Mutex<SessionState>>> {
    state
        .sessions
        .lock()
        .expect("session map poisoned")
        .get(id)
        .cloned()
        .ok_or_else(|| not_found(format!("unknown session {id}")))
}

fn trace_path(layout: &Layout, s: &SessionState) -> PathBuf {
    layout.trace(&s.scenario_name, &s.rater_id)
}

async fn create_session(State(st): State<Shared>, Json(req): Json<CreateSession>) -> ApiResult<Response> {
    if !valid_rater_id(&req.rater_id) {
        return Err(unprocessable("rater_id must be 1-64 characters of [A-Za-z0-9_-]"));
    }
    let log = st
        .scenarios
        .get(&req.scenario)
        .ok_or_else(|| not_found(format!("unknown scenario {}", req.scenario)))?;
    if st.layout.trace(&req.scenario, &req.rater_id).exists() {
        return Err(conflict(format!(
            "rater {} already has a trace for {}",
            req.rater_id, req.scenario
        )));
    }
    let s = SessionState {
        session_id: uuid::Uuid::new_v4().to_string(),
        scenario_name: req.scenario,
        rater_id: req.rater_id,
        frame_count: log.len(),
        cursor: 0,
        ratings: vec![],
        status: SessionStatus::Active,
    };
    let body = serde_json::to_value(&s).expect("session serializes");
    st.sessions
        .lock()
        .expect("session map poisoned")
        .insert(s.session_id.clone(), Arc::new(Mutex::new(s)));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = session(&st, &id)?;
    let s = s.lock().expect("session poisoned");
    Ok(Json(serde_json::to_value(&*s).expect("session serializes")))
}

#[derive(Deserialize)]
struct PostRating {
    frame: usize,
    level: u8,
}

async fn post_rating(
    State(st): State<Shared>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<PostRating>,
) -> ApiResult<Json<Value>> {
    let s = session(&st, &id)?;
    let mut s = s.lock().expect("session poisoned");
    if s.status != SessionStatus::Active {
        return Err(conflict(format!("session is {:?}", s.status).to_lowercase()));
    }
    let level = Level::new(req.level)
        .map_err(|_| unprocessable(format!("level {} outside 0..={}", req.level, NUM_LEVELS - 1)))?;
    if req.frame >= s.frame_count {
        return Err(unprocessable(format!(
            "frame {} outside 0..{}",
            req.frame, s.frame_count
        )));
    }
    match s.ratings.last() {
        // a retried request for the latest rating is acknowledged again
        Some(last) if last.frame == req.frame && last.level == level => {}
        Some(last) if req.frame <= last.frame => {
            return Err(unprocessable(format!(
                "frame {} is not after the latest rated frame {}",
                req.frame, last.frame
            )));
        }
        _ => {
            s.ratings.push(Rating {
                frame: req.frame,
                level,
            });
            s.cursor = req.frame;
        }
    }
    Ok(Json(json!({ "frame": req.frame, "level": level.get(), "cursor": s.cursor, "ratings": s.ratings.len() })))
}

async fn complete_session(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = session(&st, &id)?;
    let mut s = s.lock().expect("session poisoned");
    if s.status != SessionStatus::Active {
        return Err(conflict(format!("session is {:?}", s.status).to_lowercase()));
    }
    if s.ratings.is_empty() {
        return Err(unprocessable("session has no ratings"));
    }
    let trace = RatingTrace::new(s.rater_id.clone(), &s.scenario_name, s.ratings.clone(), RatingSource::Human)
        .map_err(internal)?;
    let path = trace_path(&st.layout, &s);
    if path.exists() {
        return Err(conflict(format!("trace {} already exists", path.display())));
    }
    save_trace(&trace, &path).map_err(internal)?;
    s.status = SessionStatus::Complete;
    Ok(Json(json!({
        "session_id": s.session_id,
        "status": s.status,
        "trace": relative(&st.layout.root, &path),
        "ratings": s.ratings.len(),
    })))
}

fn relative(root: &Path, path: &Path) -> String {
    path.strip_prefix(root).unwrap_or(path).display().to_string()
}

async fn abandon_session(State(st): State<Shared>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<Value>> {
    let s = session(&st, &id)?;
    let mut s = s.lock().expect("session poisoned");
    if s.status != SessionStatus::Active {
        return Err(conflict(format!("session is {:?}", s.status).to_lowercase()));
    }
    s.status = SessionStatus::Abandoned;
    Ok(Json(json!({ "session_id": s.session_id, "status": s.status })))
}

async fn list_scenarios(State(st): State<Shared>) -> Json<Value> {
    let list: Vec<Value> = st
        .scenarios
        .values()
        .map(|log| {
            json!({
                "name": log.name(),
                "frames": log.len(),
                "description": log.meta().description,
            })
        })
        .collect();
    Json(Value::Array(list))
}

#[derive(Deserialize)]
struct FrameQuery {
    #[serde(default)]
    from: usize,
    count: Option<usize>,
}

async fn get_frames(
    State(st): State<Shared>,
    UrlPath(name): UrlPath<String>,
    Query(q): Query<FrameQuery>,
) -> ApiResult<Json<Value>> {
    let log = st
        .scenarios
        .get(&name)
        .ok_or_else(|| not_found(format!("unknown scenario {name}")))?;
    if q.from > log.len() {
        return Err(unprocessable(format!("from {} beyond {} frames", q.from, log.len())));
    }
    let count = q.count.unwrap_or(MAX_FRAME_BATCH).min(MAX_FRAME_BATCH);
    let end = (q.from + count).min(log.len());
    let frames: Vec<Value> = log.frames()[q.from..end].iter().map(frame_to_json).collect();
    Ok(Json(json!({
        "scenario": name,
        "from": q.from,
        "total": log.len(),
        "frames": frames,
    })))
}
