//! The JSON session protocol over HTTP.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::error::CliError;
use crate::session::{CreateRequest, Session, View};

#[derive(Clone, Default)]
struct Sessions {
    table: Arc<Mutex<BTreeMap<u64, Arc<Mutex<Session>>>>>,
    next: Arc<AtomicU64>,
}

/// An error reply: a status with a JSON body `{"error": ...}`.
struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl Sessions {
    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        let found = id.parse::<u64>().ok().and_then(|n| self.table.lock().expect("session table").get(&n).cloned());
        found.ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
    }
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))
}

fn view_json(id: &str, view: &View) -> serde_json::Map<String, Value> {
    let mut out = match serde_json::to_value(view).expect("serializable") {
        Value::Object(map) => map,
        _ => unreachable!("views serialize to objects"),
    };
    out.insert("id".into(), json!(id));
    out
}

fn with_machine(mut out: serde_json::Map<String, Value>, moves: &[String]) -> Json<Value> {
    out.insert("machine_move".into(), json!(moves.last()));
    out.insert("machine_moves".into(), json!(moves));
    Json(Value::Object(out))
}

async fn create(State(sessions): State<Sessions>, bytes: Bytes) -> Result<Json<Value>, ApiError> {
    let req: CreateRequest = body(&bytes)?;
    let session = Session::create(req).map_err(|e| match e {
        CliError::User(m) | CliError::Verification(m) | CliError::Oracle(m) => ApiError(StatusCode::BAD_REQUEST, m),
    })?;
    let id = sessions.next.fetch_add(1, Ordering::SeqCst) + 1;
    let reply = with_machine(view_json(&id.to_string(), &session.view()), session.opening_moves());
    sessions.table.lock().expect("session table").insert(id, Arc::new(Mutex::new(session)));
    Ok(reply)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MoveRequest {
    #[serde(rename = "move")]
    mv: String,
}

async fn make_move(
    State(sessions): State<Sessions>,
    UrlPath(id): UrlPath<String>,
    bytes: Bytes,
) -> Result<Json<Value>, ApiError> {
    let session = sessions.get(&id)?;
    let req: MoveRequest = body(&bytes)?;
    let mut session = session.lock().expect("session");
    let moves = session.human_move(&req.mv).map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    Ok(with_machine(view_json(&id, &session.view()), &moves))
}

async fn show(State(sessions): State<Sessions>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let session = sessions.get(&id)?;
    let session = session.lock().expect("session");
    let mut out = view_json(&id, &session.view());
    out.insert("history".into(), json!(session.history()));
    Ok(Json(Value::Object(out)))
}

async fn explain(State(sessions): State<Sessions>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let session = sessions.get(&id)?;
    let session = session.lock().expect("session");
    let labels = session
        .explain()
        .ok_or_else(|| ApiError(StatusCode::BAD_REQUEST, "move labels exist for eval and ef sessions only".into()))?;
    Ok(Json(json!({ "id": id, "position": session.view().position, "labels": labels })))
}

/// The protocol routes, with static files served from `static_dir`.
pub fn router(static_dir: Option<&Path>) -> Router {
    let app = Router::new()
        .route("/session", post(create))
        .route("/session/{id}", get(show))
        .route("/session/{id}/move", post(make_move))
        .route("/session/{id}/explain", get(explain))
        .with_state(Sessions::default());
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub fn serve(port: u16, static_dir: Option<&Path>) -> Result<(), CliError> {
    let runtime =
        tokio::runtime::Runtime::new().map_err(|e| CliError::User(format!("cannot start the runtime: {e}")))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| CliError::User(format!("cannot listen on port {port}: {e}")))?;
        if let Ok(addr) = listener.local_addr() {
            eprintln!("listening on http://{addr}");
        }
        axum::serve(listener, router(static_dir)).await.map_err(|e| CliError::User(format!("server stopped: {e}")))
    })
}
