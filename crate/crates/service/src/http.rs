//! HTTP front end over [`Planner`].

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::planner::{Layer, Planner, ServiceError, StageRequest};

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::NotFound(_) | ServiceError::UnknownLayer(_) => StatusCode::NOT_FOUND,
            ServiceError::StageOrder { .. } | ServiceError::Frozen(_) | ServiceError::ExportUnavailable(_) => {
                StatusCode::CONFLICT
            }
            ServiceError::BadRequest(_) | ServiceError::Parse(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotReady(_)
            | ServiceError::Resolve(_)
            | ServiceError::Graph(_)
            | ServiceError::Route(_)
            | ServiceError::Path(_)
            | ServiceError::Trajectory(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::NotFound(_) => "not_found",
            ServiceError::StageOrder { .. } => "stage_order",
            ServiceError::Frozen(_) => "frozen",
            ServiceError::NotReady(_) => "needs_clarification",
            ServiceError::BadRequest(_) | ServiceError::Parse(_) => "bad_request",
            ServiceError::ExportUnavailable(_) => "export_unavailable",
            ServiceError::UnknownLayer(_) => "unknown_layer",
            ServiceError::Resolve(_) => "resolve",
            ServiceError::Graph(_) => "graph",
            ServiceError::Route(_) => "route",
            ServiceError::Path(_) => "path",
            ServiceError::Trajectory(_) => "trajectory",
            ServiceError::Store(_) => "store",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            log::error!("{self}");
        }
        let mut body = json!({ "error": self.to_string(), "kind": self.kind() });
        if let ServiceError::StageOrder { requested, missing } = &self {
            body["requested"] = json!(requested);
            body["missing"] = json!(missing);
        }
        (self.status(), Json(body)).into_response()
    }
}

type Shared = Arc<Planner>;

/// Runs blocking planner work off the async workers.
async fn blocking<T: Send + 'static>(
    planner: Shared,
    f: impl FnOnce(&Planner) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(move || f(&planner))
        .await
        .unwrap_or_else(|e| std::panic::resume_unwind(e.into_panic()))
}

async fn create_session(State(p): State<Shared>) -> Result<Response, ServiceError> {
    let r = blocking(p, |p| p.create_session()).await?;
    Ok((StatusCode::CREATED, Json(json!({ "id": r.id, "stage": r.stage }))).into_response())
}

#[derive(Deserialize)]
struct Instruction {
    text: String,
}

async fn post_instruction(
    State(p): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<Instruction>,
) -> Result<Response, ServiceError> {
    let reply = blocking(p, move |p| p.post_instruction(&id, &body.text)).await?;
    Ok(Json(reply).into_response())
}

async fn run_stage(
    State(p): State<Shared>,
    Path(id): Path<String>,
    Json(req): Json<StageRequest>,
) -> Result<Response, ServiceError> {
    let report = blocking(p, move |p| p.run_stage(&id, &req)).await?;
    Ok(Json(report).into_response())
}

async fn get_session(State(p): State<Shared>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let r = blocking(p, move |p| p.session(&id)).await?;
    Ok(Json(r).into_response())
}

async fn get_overlay(
    State(p): State<Shared>,
    Path((id, layer)): Path<(String, String)>,
) -> Result<Response, ServiceError> {
    let layer: Layer = layer.parse()?;
    let bytes = blocking(p, move |p| p.overlay(&id, layer)).await?;
    Ok(([(header::CONTENT_TYPE, "application/geo+json")], bytes).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    vehicle: usize,
}

async fn export(
    State(p): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ServiceError> {
    let bytes = blocking(p, move |p| p.export(&id, q.vehicle)).await?;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], bytes).into_response())
}

pub fn router(planner: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/instructions", post(post_instruction))
        .route("/sessions/{id}/stages", post(run_stage))
        .route("/sessions/{id}/overlays/{layer}", get(get_overlay))
        .route("/sessions/{id}/export", get(export))
        .with_state(planner)
}
