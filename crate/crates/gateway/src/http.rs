//! JSON API consumed by the web console.
//!
//! | Route              | Response                                   |
//! |--------------------|--------------------------------------------|
//! | `POST /api/query`  | [`QueryResponse`] for `{"question": ...}`  |
//! | `GET /api/groups`  | food group labels                          |
//! | `GET /api/schema`  | `[{"name", "kind"}]`                       |
//! | `GET /api/health`  | store size and backend kinds               |
//!
//! Errors are `{"error": message}` with 400 for bad requests, 502 when the
//! embedding backend is down and 503 while no snapshot is loaded.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nutrifilter_core::filtergen::{CascadeError, RetrievalEngine};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::app::{answer, schema_view};

#[derive(Clone, Default)]
pub struct AppState {
    /// `None` until a snapshot has been loaded.
    pub engine: Option<Arc<RetrievalEngine>>,
}

impl AppState {
    pub fn new(engine: RetrievalEngine) -> Self {
        Self {
            engine: Some(Arc::new(engine)),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct QueryRequest {
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Health {
    pub status: String,
    pub store_size: usize,
    pub backend_kinds: BackendKinds,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct BackendKinds {
    pub embedding: Option<String>,
    pub llm: Option<String>,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

fn not_ready() -> ApiError {
    ApiError(StatusCode::SERVICE_UNAVAILABLE, "no snapshot loaded".into())
}

fn engine(state: &AppState) -> Result<Arc<RetrievalEngine>, ApiError> {
    state.engine.clone().ok_or_else(not_ready)
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/query", post(query))
        .route("/api/groups", get(groups))
        .route("/api/schema", get(schema))
        .route("/api/health", get(health))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn query(
    State(state): State<AppState>,
    body: Result<Json<QueryRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    if req.question.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "question is empty".into()));
    }
    let engine = engine(&state)?;
    let outcome = tokio::task::spawn_blocking(move || answer(&engine, &req.question))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    match outcome {
        Ok(resp) => Ok(Json(resp).into_response()),
        Err(e @ CascadeError::EmbeddingUnavailable(_)) => Err(ApiError(StatusCode::BAD_GATEWAY, e.to_string())),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn groups(State(state): State<AppState>) -> Result<Json<Vec<String>>, ApiError> {
    Ok(Json(engine(&state)?.food_groups().iter().cloned().collect()))
}

async fn schema(State(state): State<AppState>) -> Result<Response, ApiError> {
    let engine = engine(&state)?;
    Ok(Json(schema_view(&engine)).into_response())
}

async fn health(State(state): State<AppState>) -> Response {
    match &state.engine {
        Some(e) => Json(Health {
            status: "ok".into(),
            store_size: e.store().len(),
            backend_kinds: BackendKinds {
                embedding: Some(e.embedder().kind().into()),
                llm: Some(e.llm().kind().into()),
            },
        })
        .into_response(),
        None => (
            StatusCode::SERVICE_UNAVAILABLE,
            Json(Health {
                status: "no snapshot loaded".into(),
                store_size: 0,
                backend_kinds: BackendKinds {
                    embedding: None,
                    llm: None,
                },
            }),
        )
            .into_response(),
    }
}

/// Serves `router` on `bind` until Ctrl-C.
pub async fn serve(state: AppState, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
