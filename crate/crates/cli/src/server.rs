//! The editing service. Reads are served from an immutable snapshot that is
//! swapped atomically; every write goes through one mutex so revisions are
//! checked and bumped in order.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use arc_swap::ArcSwap;
use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use serde_json::value::RawValue;
use tokio::sync::Mutex;

use lumascape_core::model::{deserialize, serialize, serialize_analysis, serialize_palette, SchemaError};
use lumascape_core::render::{frames_raw, render_all, FixtureConfig, DEFAULT_FPS};
use lumascape_core::Lightscape;

use crate::commands::{read_analysis, read_lightscape};
use crate::{CmdResult, Failure};

/// Upper bound on `/api/frames?fps=`; keeps one request from rendering
/// an unbounded number of frames.
pub const MAX_FPS: f64 = 240.0;

pub struct Snapshot {
    pub revision: u64,
    pub document: Lightscape,
    pub json: String,
}

pub struct AppState {
    snapshot: ArcSwap<Snapshot>,
    write_lock: Mutex<()>,
    path: PathBuf,
    audio: Bytes,
    analysis: Option<String>,
    fixtures: FixtureConfig,
}

#[derive(Debug, Default)]
pub struct ServeArgs {
    pub lightscape: PathBuf,
    pub audio: PathBuf,
    pub analysis: Option<PathBuf>,
    pub fixtures: Option<PathBuf>,
}

impl AppState {
    /// Loads and validates everything up front; the service never starts
    /// on an invalid document.
    pub fn load(args: &ServeArgs) -> CmdResult<Arc<Self>> {
        let document = read_lightscape(&args.lightscape)?;
        let audio = std::fs::read(&args.audio).map_err(|e| Failure::input(format!("{}: {e}", args.audio.display())))?;
        let analysis = match &args.analysis {
            Some(p) => Some(serialize_analysis(&read_analysis(p)?)),
            None => None,
        };
        let fixtures = lumascape_core::pipeline::load_fixtures(args.fixtures.as_deref())?;
        Ok(Arc::new(Self::new(
            args.lightscape.clone(),
            document,
            audio.into(),
            analysis,
            fixtures,
        )))
    }

    pub fn new(
        path: PathBuf,
        document: Lightscape,
        audio: Bytes,
        analysis: Option<String>,
        fixtures: FixtureConfig,
    ) -> Self {
        let json = serialize(&document);
        Self {
            snapshot: ArcSwap::from_pointee(Snapshot {
                revision: 1,
                document,
                json,
            }),
            write_lock: Mutex::new(()),
            path,
            audio,
            analysis,
            fixtures,
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot.load_full()
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/lightscape", get(get_lightscape).put(put_lightscape))
        .route("/api/audio", get(get_audio))
        .route("/api/analysis", get(get_analysis))
        .route("/api/frames", get(get_frames))
        .route("/api/palette", get(get_palette))
        .with_state(state)
}

fn json_text(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn get_lightscape(State(state): State<Arc<AppState>>) -> Response {
    let snap = state.snapshot();
    json_text(
        StatusCode::OK,
        format!(
            "{{\"revision\": {}, \"document\": {}}}\n",
            snap.revision,
            snap.json.trim_end()
        ),
    )
}

#[derive(Deserialize)]
struct PutBody<'a> {
    revision: u64,
    #[serde(borrow)]
    document: &'a RawValue,
}

async fn put_lightscape(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let put: PutBody = match serde_json::from_slice(&body) {
        Ok(p) => p,
        Err(e) => {
            return (
                StatusCode::UNPROCESSABLE_ENTITY,
                Json(json!({ "error": format!("request body: {e}"), "violations": [] })),
            )
                .into_response()
        }
    };

    let _guard = state.write_lock.lock().await;
    let current = state.snapshot();
    if put.revision != current.revision {
        return (
            StatusCode::CONFLICT,
            Json(json!({ "error": "stale revision", "revision": current.revision })),
        )
            .into_response();
    }

    let document = match deserialize(put.document.get().as_bytes()) {
        Ok(d) => d,
        Err(e) => {
            let violations = match &e {
                SchemaError::Invalid(v) => serde_json::to_value(v).unwrap_or_default(),
                _ => json!([]),
            };
            return (
                StatusCode::UNPROCESSABLE_ENTITY,
                Json(json!({ "error": e.to_string(), "violations": violations })),
            )
                .into_response();
        }
    };

    let json = serialize(&document);
    let path = state.path.clone();
    let text = json.clone();
    let written = tokio::task::spawn_blocking(move || replace_atomically(&path, text.as_bytes())).await;
    match written {
        Ok(Ok(())) => {}
        Ok(Err(e)) => {
            return error(
                StatusCode::INTERNAL_SERVER_ERROR,
                format!("{}: {e}", state.path.display()),
            )
        }
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }

    let revision = current.revision + 1;
    state.snapshot.store(Arc::new(Snapshot {
        revision,
        document,
        json,
    }));
    log::info!("saved {} at revision {revision}", state.path.display());
    (StatusCode::OK, Json(json!({ "revision": revision }))).into_response()
}

/// Temp file in the same directory, fsync, then rename over the target, so
/// a crash leaves either the old file or the new one.
pub fn replace_atomically(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    use std::io::Write;
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    if let Ok(d) = std::fs::File::open(dir) {
        let _ = d.sync_all();
    }
    Ok(())
}

async fn get_audio(State(state): State<Arc<AppState>>) -> Response {
    ([(header::CONTENT_TYPE, "audio/wav")], state.audio.clone()).into_response()
}

async fn get_analysis(State(state): State<Arc<AppState>>) -> Response {
    match &state.analysis {
        Some(text) => json_text(StatusCode::OK, text.clone()),
        None => error(StatusCode::NOT_FOUND, "no analysis document loaded"),
    }
}

#[derive(Deserialize)]
struct FramesQuery {
    fps: Option<f64>,
}

async fn get_frames(State(state): State<Arc<AppState>>, Query(q): Query<FramesQuery>) -> Response {
    let fps = q.fps.unwrap_or(DEFAULT_FPS);
    if !(fps > 0.0 && fps <= MAX_FPS) {
        return error(StatusCode::BAD_REQUEST, format!("fps must be in (0, {MAX_FPS}]"));
    }
    let snap = state.snapshot();
    let st = state.clone();
    let rendered = tokio::task::spawn_blocking(move || {
        render_all(&snap.document, &st.fixtures, fps).map(|f| frames_raw(&f, st.fixtures.fixtures.len(), fps))
    })
    .await;
    match rendered {
        Ok(Ok(bytes)) => ([(header::CONTENT_TYPE, "application/octet-stream")], bytes).into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn get_palette(State(state): State<Arc<AppState>>) -> Response {
    json_text(StatusCode::OK, serialize_palette(&state.snapshot().document.palette))
}

/// Binds and serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, host: &str, port: u16) -> CmdResult {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| Failure::input(format!("cannot listen on {host}:{port}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| Failure::input(e.to_string()))?;
    log::info!("serving {} on http://{addr}", state.path.display());
    eprintln!("listening on http://{addr}");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Failure::input(e.to_string()))
}
