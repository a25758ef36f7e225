use std::collections::BTreeMap;

use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;
use waternet::network::Network;
use waternet::solution::Solution;
use waternet::validate::{validate, ValidationReport};

use crate::runs::{RunKind, RunRecord, RunRequest, RunStatus, SubmitError};
use crate::store::{Collection, StoreError};
use crate::AppState;

/// Seconds a client should wait after a storage failure.
const RETRY_AFTER: &str = "5";

pub enum ApiError {
    Store(StoreError),
    BadRequest(String),
    Invalid(ValidationReport),
    Conflict(String),
    QueueFull(String),
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        ApiError::Store(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::Store(e @ StoreError::NotFound(_)) => (StatusCode::NOT_FOUND, json!({ "error": e.to_string() })),
            ApiError::Store(e @ StoreError::InvalidId(_)) => (StatusCode::BAD_REQUEST, json!({ "error": e.to_string() })),
            ApiError::Store(StoreError::Corrupt { id, message }) => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({ "error": format!("document is corrupt: {message}"), "id": id }))
            }
            ApiError::Store(e @ StoreError::Unavailable(_)) => {
                log::error!("{e}");
                let body = Json(json!({ "error": e.to_string() }));
                return (StatusCode::SERVICE_UNAVAILABLE, [(header::RETRY_AFTER, RETRY_AFTER)], body).into_response();
            }
            ApiError::BadRequest(message) => (StatusCode::BAD_REQUEST, json!({ "error": message })),
            ApiError::Invalid(report) => (StatusCode::UNPROCESSABLE_ENTITY, json!({ "error": "network is invalid", "report": report })),
            ApiError::Conflict(message) => (StatusCode::CONFLICT, json!({ "error": message })),
            ApiError::QueueFull(message) => (StatusCode::TOO_MANY_REQUESTS, json!({ "error": message })),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T = Response> = Result<T, ApiError>;

fn json_document(text: impl Into<String>) -> Response {
    ([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], text.into()).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/networks", get(list_networks))
        .route("/networks/{id}", get(get_network).put(put_network).delete(delete_network))
        .route("/runs", get(list_runs).post(submit_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/solution", get(get_solution))
        .with_state(state)
}

async fn list_networks(State(state): State<AppState>) -> ApiResult {
    let mut entries = Vec::new();
    for id in state.store.list(Collection::Networks)? {
        match state.store.get_network(&id) {
            Ok(doc) => entries.push(json!({ "id": id, "version": doc.version })),
            Err(StoreError::Corrupt { .. }) => entries.push(json!({ "id": id, "corrupt": true })),
            // Deleted between listing and reading.
            Err(StoreError::NotFound(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Json(entries).into_response())
}

async fn get_network(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let doc = state.store.get_network(&id)?;
    let mut response = json_document(doc.document);
    response.headers_mut().insert("x-version", HeaderValue::from(doc.version));
    Ok(response)
}

fn parse_network(body: &str) -> ApiResult<Network> {
    let net = Network::from_json(body).map_err(|e| ApiError::BadRequest(format!("malformed network: {e}")))?;
    let report = validate(&net);
    if !report.is_valid() {
        return Err(ApiError::Invalid(report));
    }
    Ok(net)
}

async fn put_network(State(state): State<AppState>, Path(id): Path<String>, body: String) -> ApiResult {
    crate::store::check_id(&id)?;
    let net = parse_network(&body)?;
    let version = state.store.put_network(&id, net.to_canonical_json())?;
    Ok(Json(json!({ "id": id, "version": version })).into_response())
}

async fn delete_network(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    crate::store::check_id(&id)?;
    if state.executor.is_referenced(&id) {
        return Err(ApiError::Conflict(format!("network `{id}` is used by a queued or running run")));
    }
    state.store.delete(Collection::Networks, &id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn submit_run(State(state): State<AppState>, body: String) -> ApiResult {
    let request: RunRequest = serde_json::from_str(&body).map_err(|e| ApiError::BadRequest(format!("malformed run request: {e}")))?;
    let mut snapshots = BTreeMap::new();
    for id in request.network_ids() {
        let doc = state.store.get_network(id)?;
        let net = Network::from_json(&doc.document).map_err(|e| StoreError::Corrupt { id: id.to_string(), message: e.to_string() })?;
        let report = validate(&net);
        if !report.is_valid() {
            return Err(ApiError::Invalid(report));
        }
        snapshots.insert(id.to_string(), net);
    }
    let record = state.executor.submit(request, snapshots).map_err(|e| match e {
        SubmitError::QueueFull(_) => ApiError::QueueFull(e.to_string()),
        SubmitError::Store(e) => ApiError::Store(e),
    })?;
    let location = HeaderValue::try_from(format!("/runs/{}", record.id)).expect("run ids are header-safe");
    let body = Json(json!({ "id": record.id, "status": record.status }));
    Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], body).into_response())
}

fn load_run(state: &AppState, id: &str) -> ApiResult<(Vec<u8>, RunRecord)> {
    let bytes = state.store.read(Collection::Runs, id)?;
    let record = serde_json::from_slice(&bytes).map_err(|e| StoreError::Corrupt { id: id.to_string(), message: e.to_string() })?;
    Ok((bytes, record))
}

async fn list_runs(State(state): State<AppState>) -> ApiResult {
    let mut entries = Vec::new();
    for id in state.store.list(Collection::Runs)? {
        match load_run(&state, &id) {
            Ok((_, run)) => entries.push(json!({ "id": id, "kind": run.kind, "status": run.status })),
            Err(ApiError::Store(StoreError::Corrupt { .. })) => entries.push(json!({ "id": id, "corrupt": true })),
            Err(ApiError::Store(StoreError::NotFound(_))) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(Json(entries).into_response())
}

async fn get_run(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let (bytes, _) = load_run(&state, &id)?;
    Ok(json_document(String::from_utf8_lossy(&bytes).into_owned()))
}

async fn get_solution(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let (_, run) = load_run(&state, &id)?;
    if run.kind != RunKind::Optimize {
        return Err(ApiError::Conflict(format!("run `{id}` is a {:?} run and has no solution", run.kind)));
    }
    match (run.status, run.result) {
        (RunStatus::Done, Some(value)) => {
            let solution: Solution = serde_json::from_value(value).map_err(|e| StoreError::Corrupt { id: id.clone(), message: e.to_string() })?;
            Ok(json_document(solution.to_json()))
        }
        (status, _) => Err(ApiError::Conflict(format!("run `{id}` is {status:?}"))),
    }
}
