//! Routes: `POST /render`, `GET /volumes`, static files under `/ui`.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::error::ServiceError;
use crate::render::RenderService;
use crate::schema::{ErrorBody, RenderRequest};

#[derive(Clone)]
pub struct AppState {
    pub service: Arc<RenderService>,
    /// Directory served under `/ui`; a placeholder page when unset.
    pub ui_dir: Option<PathBuf>,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status =
            StatusCode::from_u16(self.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (
            status,
            Json(ErrorBody {
                error: self.to_string(),
            }),
        )
            .into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/render", post(render))
        .route("/volumes", get(volumes))
        .route("/ui", get(|| async { Redirect::permanent("/ui/") }))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui_file))
        .with_state(state)
}

async fn render(State(state): State<AppState>, body: Bytes) -> Result<Response, ServiceError> {
    let req: RenderRequest = serde_json::from_slice(&body)
        .map_err(|e| ServiceError::BadRequest(format!("malformed request: {e}")))?;
    let service = state.service.clone();
    let timeout = service.config().timeout;
    // the blocking task keeps running after a timeout; its result is dropped
    let task = tokio::task::spawn_blocking(move || service.render(&req));
    match tokio::time::timeout(timeout, task).await {
        Err(_) => Err(ServiceError::Timeout(timeout.as_secs_f64())),
        Ok(Err(join)) => Err(ServiceError::Internal(format!(
            "render task failed: {join}"
        ))),
        Ok(Ok(result)) => Ok(Json(result?).into_response()),
    }
}

async fn volumes(State(state): State<AppState>) -> Response {
    let service = state.service.clone();
    match tokio::task::spawn_blocking(move || service.registry().list()).await {
        Ok(list) => Json(list).into_response(),
        Err(e) => ServiceError::Internal(e.to_string()).into_response(),
    }
}

const PLACEHOLDER: &str =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>volren</title></head>\n\
<body><p>No viewer is installed. POST render requests to <code>/render</code>; \
list volumes at <code>/volumes</code>.</p></body></html>\n";

async fn ui_index(State(state): State<AppState>) -> Response {
    match &state.ui_dir {
        Some(dir) => serve_file(dir, "index.html").await,
        None => (
            [(header::CONTENT_TYPE, "text/html; charset=utf-8")],
            PLACEHOLDER,
        )
            .into_response(),
    }
}

async fn ui_file(State(state): State<AppState>, UrlPath(path): UrlPath<String>) -> Response {
    match &state.ui_dir {
        Some(dir) => serve_file(dir, &path).await,
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn serve_file(dir: &Path, rel: &str) -> Response {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return StatusCode::NOT_FOUND.into_response();
    }
    let mut path = dir.join(rel);
    if path.is_dir() {
        path.push("index.html");
    }
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response(),
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("png") => "image/png",
        Some("svg") => "image/svg+xml",
        Some("wasm") => "application/wasm",
        _ => "application/octet-stream",
    }
}

/// Serves on an already bound listener until the process is stopped.
pub async fn serve(state: AppState, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
