use std::path::PathBuf;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use lumascape_cli::server::{router, AppState};
use lumascape_core::model::{deserialize, serialize, serialize_palette};
use lumascape_core::render::{render_frame, FixtureConfig};
use lumascape_core::Lightscape;

const FIXTURE: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../core/tests/data/fixture_lightscape.json"
);
const AUDIO: &[u8] = b"RIFF\x24\x00\x00\x00WAVEfmt ";

fn fixture() -> Lightscape {
    deserialize(&std::fs::read(FIXTURE).unwrap()).unwrap()
}

struct Service {
    _dir: tempfile::TempDir,
    path: PathBuf,
    app: Router,
}

fn service(analysis: Option<String>) -> Service {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lightscape.json");
    std::fs::write(&path, serialize(&fixture())).unwrap();
    let state = AppState::new(
        path.clone(),
        fixture(),
        Bytes::from_static(AUDIO),
        analysis,
        FixtureConfig::default(),
    );
    Service {
        _dir: dir,
        path,
        app: router(Arc::new(state)),
    }
}

async fn send(app: &Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Bytes) {
    let req = Request::builder().method(method).uri(uri).body(body.into()).unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    (status, res.into_body().collect().await.unwrap().to_bytes())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Bytes) {
    send(app, Method::GET, uri, Body::empty()).await
}

async fn put(app: &Router, revision: u64, document: &str) -> (StatusCode, Value) {
    let body = format!("{{\"revision\": {revision}, \"document\": {document}}}");
    let (status, bytes) = send(app, Method::PUT, "/api/lightscape", body).await;
    (status, serde_json::from_slice(&bytes).unwrap())
}

fn edited() -> Lightscape {
    let mut ls = fixture();
    ls.provenance.insert("editedBy".into(), "designer".into());
    ls
}

#[tokio::test]
async fn get_returns_document_and_revision() {
    let s = service(None);
    let (status, body) = get(&s.app, "/api/lightscape").await;
    assert_eq!(status, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["revision"], 1);
    let doc = serde_json::to_vec(&v["document"]).unwrap();
    assert_eq!(deserialize(&doc).unwrap(), fixture());
}

#[tokio::test]
async fn put_with_current_revision_saves_and_bumps() {
    let s = service(None);
    let text = serialize(&edited());
    let (status, v) = put(&s.app, 1, &text).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["revision"], 2);
    assert_eq!(std::fs::read_to_string(&s.path).unwrap(), text);

    let (_, body) = get(&s.app, "/api/lightscape").await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["revision"], 2);
    assert_eq!(v["document"]["provenance"]["editedBy"], "designer");
}

#[tokio::test]
async fn stale_revision_is_a_conflict_and_changes_nothing() {
    let s = service(None);
    assert_eq!(put(&s.app, 1, &serialize(&edited())).await.0, StatusCode::OK);
    let saved = std::fs::read_to_string(&s.path).unwrap();

    let mut other = fixture();
    other.provenance.insert("editedBy".into(), "someone else".into());
    let (status, v) = put(&s.app, 1, &serialize(&other)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(v["revision"], 2);
    assert_eq!(std::fs::read_to_string(&s.path).unwrap(), saved);
}

#[tokio::test]
async fn invalid_documents_are_rejected_with_violations() {
    let s = service(None);
    let original = std::fs::read_to_string(&s.path).unwrap();
    let mut ls = fixture();
    ls.objects[1].id = ls.objects[0].id.clone();
    let (status, v) = put(&s.app, 1, &serialize(&ls)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let codes: Vec<&str> = v["violations"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["code"].as_str().unwrap())
        .collect();
    assert!(codes.contains(&"duplicate-id"), "{v}");

    let (status, _) = put(&s.app, 1, "{\"version\": \"1.0\"}").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = send(&s.app, Method::PUT, "/api/lightscape", "not json").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    assert_eq!(std::fs::read_to_string(&s.path).unwrap(), original);
    let (_, body) = get(&s.app, "/api/lightscape").await;
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["revision"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_puts_on_one_revision_let_exactly_one_through() {
    let s = service(None);
    let tasks: Vec<_> = (0..8)
        .map(|i| {
            let app = s.app.clone();
            tokio::spawn(async move {
                let mut ls = fixture();
                ls.provenance.insert("writer".into(), i.to_string());
                put(&app, 1, &serialize(&ls)).await.0
            })
        })
        .collect();
    let mut statuses = Vec::new();
    for t in tasks {
        statuses.push(t.await.unwrap());
    }
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::OK).count(), 1);
    assert_eq!(statuses.iter().filter(|s| **s == StatusCode::CONFLICT).count(), 7);
    let (_, body) = get(&s.app, "/api/lightscape").await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["revision"], 2);
    let on_disk = deserialize(&std::fs::read(&s.path).unwrap()).unwrap();
    assert_eq!(
        on_disk.provenance["writer"],
        v["document"]["provenance"]["writer"].as_str().unwrap()
    );
}

#[tokio::test]
async fn frames_match_the_renderer() {
    let s = service(None);
    let (status, body) = get(&s.app, "/api/frames?fps=30").await;
    assert_eq!(status, StatusCode::OK);
    let newline = body.iter().position(|b| *b == b'\n').unwrap();
    let header = std::str::from_utf8(&body[..newline]).unwrap();
    assert_eq!(header, "LUMARAW1 16 1 30");
    let data = &body[newline + 1..];
    let ls = fixture();
    let n = (ls.song_duration * 30.0).floor() as usize + 1;
    assert_eq!(data.len(), n * 16 * 3);

    let fixtures = FixtureConfig::default();
    let mut state = 0x9E37_79B9u64;
    for _ in 0..20 {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let k = (state >> 33) as usize % n;
        let want = render_frame(&ls, &fixtures, k as f64 / 30.0).unwrap();
        let got: Vec<[u8; 3]> = data[k * 48..(k + 1) * 48]
            .chunks(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        assert_eq!(got, want.colors, "frame {k}");
    }
}

#[tokio::test]
async fn frames_reject_bad_rates() {
    let s = service(None);
    for q in ["fps=0", "fps=-3", "fps=1000", "fps=abc", "fps=NaN"] {
        let (status, _) = get(&s.app, &format!("/api/frames?{q}")).await;
        assert_eq!(status, StatusCode::BAD_REQUEST, "{q}");
    }
    let (status, body) = get(&s.app, "/api/frames").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.starts_with(b"LUMARAW1 16 1 30\n"));
}

#[tokio::test]
async fn palette_audio_and_analysis() {
    let s = service(None);
    let (status, body) = get(&s.app, "/api/palette").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        std::str::from_utf8(&body).unwrap(),
        serialize_palette(&fixture().palette)
    );

    let (status, body) = get(&s.app, "/api/audio").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&body[..], AUDIO);

    assert_eq!(get(&s.app, "/api/analysis").await.0, StatusCode::NOT_FOUND);
    let s = service(Some("{\"duration\": 1.000000}\n".into()));
    let (status, body) = get(&s.app, "/api/analysis").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(&body[..], b"{\"duration\": 1.000000}\n");
}

#[tokio::test]
async fn palette_follows_saved_edits() {
    let s = service(None);
    let mut ls = fixture();
    ls.palette.background = lumascape_core::Color::rgb(60, 60, 60);
    assert_eq!(put(&s.app, 1, &serialize(&ls)).await.0, StatusCode::OK);
    let (_, body) = get(&s.app, "/api/palette").await;
    assert_eq!(std::str::from_utf8(&body).unwrap(), serialize_palette(&ls.palette));
}
