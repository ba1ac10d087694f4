//! HTTP classification service.
//!
//! `POST /classify` takes `{"text": ..., "threshold": ...}` and answers
//! `{"label", "score", "answer_url"}`; `GET /health` reports the resource
//! hash and intent count. Both return 503 until the resources have loaded.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use clap::Parser;
use serde::Deserialize;
use serde_json::json;

use crate::app::{Intents, SourcePaths};

pub const MAX_TEXT_BYTES: usize = 10_000;

/// Shared state; empty until loading finishes, then never changes.
#[derive(Clone, Default)]
pub struct AppState {
    intents: Arc<OnceLock<Intents>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn loaded(intents: Intents) -> Self {
        let s = Self::new();
        s.set(intents);
        s
    }

    /// Installs the resources; later calls are ignored.
    pub fn set(&self, intents: Intents) {
        let _ = self.intents.set(intents);
    }

    pub fn is_loaded(&self) -> bool {
        self.intents.get().is_some()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassifyRequest {
    text: String,
    threshold: Option<f64>,
}

fn json_response(status: StatusCode, body: impl serde::Serialize) -> Response {
    let text = serde_json::to_string(&body).expect("responses serialize");
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn bad_request(msg: &str) -> Response {
    json_response(StatusCode::BAD_REQUEST, json!({ "error": msg }))
}

fn unavailable() -> Response {
    json_response(StatusCode::SERVICE_UNAVAILABLE, json!({ "status": "loading" }))
}

async fn classify(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(intents) = state.intents.get() else { return unavailable() };
    let req: ClassifyRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return bad_request(&format!("malformed request: {e}")),
    };
    if req.text.len() > MAX_TEXT_BYTES {
        return bad_request(&format!("text exceeds {MAX_TEXT_BYTES} bytes"));
    }
    if let Some(t) = req.threshold {
        if !(0.0..=1.0).contains(&t) {
            return bad_request("threshold must be between 0 and 1");
        }
    }
    let verdict = intents.classify(&req.text, req.threshold);
    json_response(StatusCode::OK, verdict)
}

async fn health(State(state): State<AppState>) -> Response {
    let Some(intents) = state.intents.get() else { return unavailable() };
    json_response(
        StatusCode::OK,
        json!({
            "status": "ok",
            "content_hash": intents.content_hash,
            "intent_count": intents.composed.len(),
        }),
    )
}

pub fn router(state: AppState) -> Router {
    Router::new().route("/classify", post(classify)).route("/health", get(health)).with_state(state)
}

#[derive(Debug, Parser)]
#[command(name = "lgg-serve", version, about = "Serve rule-based intent classification over HTTP")]
pub struct ServeArgs {
    /// Composition config with the intents and their answer URLs
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub grammars: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub lexicons: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Port to listen on; 0 picks a free one
    #[arg(long, env = "LGG_PORT", default_value_t = 8080)]
    pub port: u16,
}

/// Binds, prints the bound address, loads the resources in the background
/// and serves until the process ends.
pub async fn serve(args: ServeArgs) -> Result<(), String> {
    let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
        .await
        .map_err(|e| format!("cannot bind {}:{}: {e}", args.host, args.port))?;
    let addr: SocketAddr = listener.local_addr().map_err(|e| e.to_string())?;
    println!("listening on http://{addr}");
    let state = AppState::new();
    let loading = {
        let state = state.clone();
        let paths = SourcePaths { grammars: args.grammars.clone(), lexicons: args.lexicons.clone() };
        let config = args.config.clone();
        tokio::task::spawn_blocking(move || {
            let intents = Intents::load(&paths, &config).map_err(|e| e.to_string())?;
            let line = format!("loaded {} intents ({})", intents.composed.len(), intents.content_hash);
            state.set(intents);
            println!("{line}");
            Ok::<(), String>(())
        })
    };
    // The server keeps answering (503 at first) while the resources load.
    let server = tokio::spawn(async move { axum::serve(listener, router(state)).await });
    match loading.await {
        Ok(Ok(())) => {}
        Ok(Err(e)) => return Err(e),
        Err(e) => return Err(format!("loader failed: {e}")),
    }
    match server.await {
        Ok(r) => r.map_err(|e| e.to_string()),
        Err(e) => Err(format!("server task failed: {e}")),
    }
}

/// Entry point of the `lgg-serve` binary.
pub fn main() -> ! {
    let args = ServeArgs::parse();
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(serve(args)) {
        Ok(()) => std::process::exit(0),
        Err(e) => {
            eprintln!("lgg-serve: {e}");
            std::process::exit(1)
        }
    }
}
