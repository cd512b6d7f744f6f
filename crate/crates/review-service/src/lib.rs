//! HTTP front end for [`organdet::review::ReviewStore`].
//!
//! Reads share a read lock on the store. Every mutation goes through one
//! writer thread fed by a channel, so corrections are applied strictly one at
//! a time and conflicting edits resolve deterministically.

use std::future::Future;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock, RwLockReadGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use organdet::category::color_for;
use organdet::review::{
    ApplyOutcome, Correction, CorrectionRequest, ImageFilter, ReviewError, ReviewStatus,
    ReviewStore, REVIEW_API_VERSION,
};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{mpsc, oneshot};
use tower_http::services::ServeDir;

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory holding the image files named by the manifest.
    pub images_root: Option<PathBuf>,
    /// Static assets of the browser workbench, served for unmatched paths.
    pub ui_dir: Option<PathBuf>,
}

type Job = (String, CorrectionRequest, oneshot::Sender<Result<ApplyOutcome, ReviewError>>);

#[derive(Clone)]
struct AppState {
    store: Arc<RwLock<ReviewStore>>,
    writer: mpsc::Sender<Job>,
    images_root: Option<Arc<PathBuf>>,
}

impl AppState {
    fn read(&self) -> RwLockReadGuard<'_, ReviewStore> {
        self.store.read().unwrap_or_else(|e| e.into_inner())
    }

    async fn submit(&self, image_id: String, req: CorrectionRequest) -> Result<ApplyOutcome, ApiError> {
        let (tx, rx) = oneshot::channel();
        self.writer
            .send((image_id, req, tx))
            .await
            .map_err(|_| ApiError::unavailable())?;
        rx.await.map_err(|_| ApiError::unavailable())?.map_err(ApiError::from)
    }
}

/// Starts the writer thread. It exits once every router clone is dropped.
fn spawn_writer(store: Arc<RwLock<ReviewStore>>) -> mpsc::Sender<Job> {
    let (tx, mut rx) = mpsc::channel::<Job>(64);
    std::thread::Builder::new()
        .name("review-writer".into())
        .spawn(move || {
            while let Some((image_id, req, reply)) = rx.blocking_recv() {
                let result = store
                    .write()
                    .unwrap_or_else(|e| e.into_inner())
                    .apply(&image_id, req, now_ms());
                match &result {
                    Ok(o) if !o.duplicate => tracing::info!(
                        image_id,
                        seq = o.event.seq,
                        status = o.status.as_str(),
                        "correction applied"
                    ),
                    Ok(_) => tracing::debug!(image_id, "duplicate correction ignored"),
                    Err(e) => tracing::debug!(image_id, error = %e, "correction rejected"),
                }
                let _ = reply.send(result);
            }
        })
        .expect("spawning the writer thread");
    tx
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

/// Builds the API router. Must be called inside a Tokio runtime.
pub fn router(store: ReviewStore, config: ServiceConfig) -> Router {
    let store = Arc::new(RwLock::new(store));
    let state = AppState {
        writer: spawn_writer(store.clone()),
        store,
        images_root: config.images_root.map(Arc::new),
    };
    let api = Router::new()
        .route("/health", get(health))
        .route("/categories", get(categories))
        .route("/images", get(list_images))
        .route("/images/{id}", get(get_image))
        .route("/images/{id}/file", get(get_file))
        .route("/images/{id}/corrections", post(post_correction))
        .route("/images/{id}/approve", post(post_approve))
        .route("/export", get(export))
        .route("/stats", get(stats))
        .with_state(state);
    match config.ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves `app` until `shutdown` resolves, letting in-flight requests finish.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(shutdown)
        .await
}

/// Resolves on Ctrl-C or, on Unix, SIGTERM.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {},
        () = term => {},
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }

    fn unavailable() -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, "unavailable", "review store is shutting down")
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let (status, kind) = match &e {
            ReviewError::UnknownImage(_) => (StatusCode::NOT_FOUND, "not_found"),
            ReviewError::Conflict { .. } => (StatusCode::CONFLICT, "conflict"),
            ReviewError::InvalidBox(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_box"),
            ReviewError::UnknownCategory(_) => (StatusCode::UNPROCESSABLE_ENTITY, "unknown_category"),
            ReviewError::Malformed(_) => (StatusCode::UNPROCESSABLE_ENTITY, "malformed"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Self::new(status, kind, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "version": REVIEW_API_VERSION, "error": self.kind, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let images = state.read().manifest().images.len();
    Json(json!({ "status": "ok", "version": REVIEW_API_VERSION, "images": images }))
}

async fn categories(State(state): State<AppState>) -> Json<serde_json::Value> {
    let store = state.read();
    let cats: Vec<_> = store
        .manifest()
        .vocabulary
        .iter()
        .map(|(id, name)| json!({ "id": id, "name": name, "color": color_for(name) }))
        .collect();
    Json(json!({ "version": REVIEW_API_VERSION, "categories": cats }))
}

async fn list_images(
    State(state): State<AppState>,
    Query(filter): Query<ImageFilter>,
) -> impl IntoResponse {
    Json(state.read().list_images(&filter))
}

async fn get_image(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(state.read().annotations(&id)?))
}

/// Rejects names that could escape the images root.
fn safe_relative(name: &str) -> Option<&Path> {
    let p = Path::new(name);
    let ok = !name.is_empty() && p.components().all(|c| matches!(c, Component::Normal(_)));
    ok.then_some(p)
}

fn content_type(path: &Path) -> &'static str {
    let ext = path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "jpg" | "jpeg" => "image/jpeg",
        "png" => "image/png",
        "tif" | "tiff" => "image/tiff",
        "webp" => "image/webp",
        _ => "application/octet-stream",
    }
}

async fn get_file(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let file_name = state.read().annotations(&id)?.file_name;
    let root = state
        .images_root
        .as_ref()
        .ok_or_else(|| ApiError::not_found("no images root configured"))?;
    let rel = safe_relative(&file_name)
        .ok_or_else(|| ApiError::not_found(format!("refusing to serve {file_name:?}")))?;
    let path = root.join(rel);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| ApiError::not_found(format!("{file_name}: {e}")))?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

#[derive(Debug, Serialize)]
struct CorrectionResponse {
    version: u32,
    duplicate: bool,
    status: ReviewStatus,
    event: organdet::review::CorrectionEvent,
    annotations: organdet::review::ImageAnnotations,
}

async fn respond(state: &AppState, id: String, req: CorrectionRequest) -> Result<Response, ApiError> {
    let outcome = state.submit(id.clone(), req).await?;
    let annotations = state.read().annotations(&id)?;
    let code = if outcome.duplicate {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    let body = CorrectionResponse {
        version: REVIEW_API_VERSION,
        duplicate: outcome.duplicate,
        status: outcome.status,
        event: outcome.event,
        annotations,
    };
    Ok((code, Json(body)).into_response())
}

async fn post_correction(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<CorrectionRequest>,
) -> Result<Response, ApiError> {
    respond(&state, id, req).await
}

#[derive(Debug, Default, Deserialize)]
struct ApproveBody {
    #[serde(default)]
    reviewer: String,
    #[serde(default)]
    idempotency_key: Option<String>,
}

async fn post_approve(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: axum::body::Bytes,
) -> Result<Response, ApiError> {
    // the body is optional, whatever the content type says
    let body: ApproveBody = if body.iter().all(u8::is_ascii_whitespace) {
        ApproveBody::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "malformed", e.to_string()))?
    };
    let req = CorrectionRequest {
        idempotency_key: body.idempotency_key,
        reviewer: body.reviewer,
        correction: Correction::Approve,
    };
    respond(&state, id, req).await
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    /// Comma-separated statuses; defaults to `verified,corrected`.
    status: Option<String>,
}

async fn export(
    State(state): State<AppState>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let statuses = match q.status.as_deref() {
        None | Some("") => vec![ReviewStatus::Verified, ReviewStatus::Corrected],
        Some(list) => list
            .split(',')
            .map(|s| {
                ReviewStatus::parse(s.trim()).ok_or_else(|| {
                    ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("unknown status {s:?}"))
                })
            })
            .collect::<Result<_, _>>()?,
    };
    Ok(Json(state.read().export(&statuses)).into_response())
}

async fn stats(State(state): State<AppState>) -> impl IntoResponse {
    Json(state.read().stats())
}
