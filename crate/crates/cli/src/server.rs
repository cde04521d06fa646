use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use onoma::inference::InferenceError;
use onoma::nominalist::NominalistError;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use crate::services::Services;

const DEFAULT_K: usize = 5;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenderRequest {
    name: String,
    #[serde(default)]
    image_refs: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UsernamesRequest {
    name: String,
    #[serde(default)]
    birth_year: Option<u32>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

#[allow(clippy::result_large_err)]
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body).map_err(|e| error(StatusCode::BAD_REQUEST, e))
}

async fn healthz(State(svc): State<Arc<Services>>) -> Response {
    Json(json!({ "status": "ok", "records": svc.index.len() })).into_response()
}

async fn gender(State(svc): State<Arc<Services>>, body: Bytes) -> Response {
    let req: GenderRequest = match parse(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    if req.name.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "name must be non-empty");
    }
    let strict = svc.config.server.strict;
    let result = tokio::task::spawn_blocking(move || svc.gender(&req.name, &req.image_refs).map(|e| (e, !req.image_refs.is_empty()))).await;
    match result {
        Ok(Ok((est, had_images))) if strict && had_images && est.degraded => {
            error(StatusCode::SERVICE_UNAVAILABLE, "image channel unavailable")
        }
        Ok(Ok((est, _))) => Json(est).into_response(),
        Ok(Err(InferenceError::EmptyQuery)) => error(StatusCode::BAD_REQUEST, InferenceError::EmptyQuery),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn usernames(State(svc): State<Arc<Services>>, body: Bytes) -> Response {
    let req: UsernamesRequest = match parse(&body) {
        Ok(r) => r,
        Err(resp) => return resp,
    };
    if req.name.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "name must be non-empty");
    }
    let max = svc.config.nominalist.max_candidates;
    let k = req.k.unwrap_or(DEFAULT_K);
    if k == 0 || k > max {
        return error(StatusCode::BAD_REQUEST, format!("k must lie in 1..={max}"));
    }
    let strict = svc.config.server.strict;
    let result = tokio::task::spawn_blocking(move || svc.usernames(&req.name, req.birth_year, k, req.seed)).await;
    match result {
        Ok(Ok(s)) if strict && !s.warnings.is_empty() => error(StatusCode::SERVICE_UNAVAILABLE, s.warnings.join("; ")),
        Ok(Ok(s)) => Json(s).into_response(),
        Ok(Err(e @ (NominalistError::UnresolvableName(_) | NominalistError::EmptyName))) => {
            error(StatusCode::UNPROCESSABLE_ENTITY, e)
        }
        Ok(Err(e @ NominalistError::Store(_))) => error(StatusCode::SERVICE_UNAVAILABLE, e),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

pub fn router(services: Services) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/v1/gender", post(gender))
        .route("/v1/usernames", post(usernames))
        .with_state(Arc::new(services))
}

pub async fn serve(listener: tokio::net::TcpListener, services: Services) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(services))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
