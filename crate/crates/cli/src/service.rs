//! Stateless prediction endpoint over an immutable cascade model.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use guava_core::model::Classifier;
use guava_core::CascadeModel;
use serde::Deserialize;
use serde_json::{json, Value};

/// Status code and JSON body of a service response.
#[derive(Debug, Clone, PartialEq)]
pub struct Reply {
    pub status: u16,
    pub body: Value,
}

impl Reply {
    fn error(status: u16, message: impl Into<String>) -> Self {
        Reply {
            status,
            body: json!({ "error": message.into() }),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictRequest {
    features: Vec<f32>,
}

/// Answer one `POST /v1/predict` body.
pub fn handle_predict_request(model: Option<&CascadeModel>, body: &[u8]) -> Reply {
    let Some(model) = model else {
        return Reply::error(503, "no model loaded");
    };
    let request: PredictRequest = match serde_json::from_slice(body) {
        Ok(r) => r,
        Err(e) => return Reply::error(400, format!("malformed request: {e}")),
    };
    let d = model.n_features();
    if request.features.len() != d {
        return Reply::error(
            400,
            format!("expected {d} features, got {}", request.features.len()),
        );
    }
    match model.cascade_predict(&request.features) {
        Ok(p) => Reply {
            status: 200,
            body: json!({
                "label": model.class_names[p.label],
                "class_id": p.label,
                "confidence": p.confidence,
                "route": p.route,
                "probabilities": p.probabilities,
            }),
        },
        Err(e) => Reply::error(400, e.to_string()),
    }
}

/// Answer `GET /healthz`.
pub fn handle_health(model: Option<&CascadeModel>) -> Reply {
    match model {
        Some(m) => Reply {
            status: 200,
            body: json!({ "status": "ok", "model_kind": m.kind_label(), "d": m.n_features() }),
        },
        None => Reply::error(503, "no model loaded"),
    }
}

type Shared = Option<Arc<CascadeModel>>;

fn respond(reply: Reply) -> Response {
    let status = StatusCode::from_u16(reply.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
    (status, Json(reply.body)).into_response()
}

async fn predict(State(model): State<Shared>, body: Bytes) -> Response {
    respond(handle_predict_request(model.as_deref(), &body))
}

async fn health(State(model): State<Shared>) -> Response {
    respond(handle_health(model.as_deref()))
}

pub fn router(model: Option<CascadeModel>) -> Router {
    Router::new()
        .route("/v1/predict", post(predict))
        .route("/healthz", get(health))
        .with_state(model.map(Arc::new))
}

/// Serve `router(model)` on `listener` until the process stops.
pub async fn serve(
    listener: tokio::net::TcpListener,
    model: Option<CascadeModel>,
) -> std::io::Result<()> {
    axum::serve(listener, router(model)).await
}

/// Bind `addr` and serve on a fresh multi-threaded runtime.
pub fn run_blocking(addr: SocketAddr, model: CascadeModel) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        serve(listener, Some(model)).await
    })
}
