//! axum router over a swappable engine snapshot.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::Value;
use tokio::task::JoinHandle;

use super::api::{self, ApiError};
use super::{Engine, EngineConfig, EngineError};

/// The current engine. Handlers clone the inner `Arc` once per request, so a
/// reload never changes state under a request in flight.
pub type SharedEngine = Arc<RwLock<Arc<Engine>>>;

fn snapshot(shared: &SharedEngine) -> Arc<Engine> {
    shared.read().unwrap_or_else(|e| e.into_inner()).clone()
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self.to_json())).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn int_param<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str, default: T) -> Result<T, ApiError> {
    match q.get(key) {
        None => Ok(default),
        Some(raw) => raw.parse().map_err(|_| ApiError {
            status: 400,
            code: if key == "horizon" { "invalid_horizon" } else { "invalid_argument" },
            message: format!("{key}: expected an integer, got {raw:?}"),
            field: Some(key.into()),
        }),
    }
}

async fn stations(State(shared): State<SharedEngine>) -> Json<Value> {
    Json(api::stations_doc(&snapshot(&shared)))
}

async fn history(
    State(shared): State<SharedEngine>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let hours = int_param(&q, "hours", 24i64)?;
    api::history_doc(&snapshot(&shared), &id, hours).map(Json)
}

async fn prediction(
    State(shared): State<SharedEngine>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult {
    let engine = snapshot(&shared);
    let horizon = int_param(&q, "horizon", engine.config().horizon)?;
    api::prediction_doc(&engine, &id, horizon).map(Json)
}

async fn route(State(shared): State<SharedEngine>, body: Bytes) -> ApiResult {
    let body: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(400, "malformed_json", format!("request body: {e}")))?;
    let engine = snapshot(&shared);
    let request = api::parse_route_request(&body, engine.now())?;
    // Route evaluation is CPU-bound; keep it off the async workers.
    tokio::task::spawn_blocking(move || api::route_doc(&engine, &request))
        .await
        .map_err(|e| ApiError::new(500, "internal", e.to_string()))?
        .map(Json)
}

async fn not_found() -> ApiError {
    ApiError::new(404, "not_found", "no such endpoint")
}

pub fn router(shared: SharedEngine) -> Router {
    Router::new()
        .route("/stations", get(stations))
        .route("/stations/{id}/history", get(history))
        .route("/stations/{id}/prediction", get(prediction))
        .route("/route", post(route))
        .fallback(not_found)
        .with_state(shared)
}

/// Re-runs ingestion every `interval` and swaps the engine in on success.
/// A failed reload keeps the previous state.
pub fn spawn_poller(shared: SharedEngine, config: EngineConfig, interval: Duration) -> JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(interval);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            let cfg = config.clone();
            match tokio::task::spawn_blocking(move || Engine::load(cfg)).await {
                Ok(Ok(engine)) => {
                    *shared.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(engine);
                    tracing::info!("engine reloaded");
                }
                Ok(Err(e)) => tracing::warn!("reload failed, keeping previous state: {e}"),
                Err(e) => tracing::warn!("reload task failed: {e}"),
            }
        }
    })
}

/// Loads the engine, then binds and serves until ctrl-c. Input errors surface
/// before the listen address is bound.
pub async fn serve(config: EngineConfig) -> Result<(), EngineError> {
    let cfg = config.clone();
    let engine = tokio::task::spawn_blocking(move || Engine::load(cfg))
        .await
        .map_err(|e| EngineError::Io(std::io::Error::other(e)))??;
    let shared: SharedEngine = Arc::new(RwLock::new(Arc::new(engine)));
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    let poller = (config.poll_interval_secs > 0)
        .then(|| spawn_poller(shared.clone(), config.clone(), Duration::from_secs(config.poll_interval_secs)));
    let result = axum::serve(listener, router(shared))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    if let Some(p) = poller {
        p.abort();
    }
    result.map_err(EngineError::Io)
}
