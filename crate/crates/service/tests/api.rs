use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use waternet::gen::{generate, shape_config, tiny_blend, Shape, Variant};
use waternet::network::Network;
use waternet::OptimizeRequest;
use waternet_service::{app, ServiceConfig};

struct Reply {
    status: StatusCode,
    headers: axum::http::HeaderMap,
    body: String,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_str(&self.body).unwrap_or_else(|e| panic!("{e}: {}", self.body))
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: impl Into<String>) -> Reply {
    let request = Request::builder().method(method).uri(uri).header("content-type", "application/json").body(Body::from(body.into())).unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let headers = response.headers().clone();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    Reply { status, headers, body: String::from_utf8(bytes.to_vec()).unwrap() }
}

fn config(dir: &tempfile::TempDir) -> ServiceConfig {
    let mut config = ServiceConfig::new(dir.path());
    config.workers = 2;
    config
}

async fn wait_for(app: &Router, run: &str, done: impl Fn(&str) -> bool) -> Value {
    let started = Instant::now();
    loop {
        let reply = call(app, "GET", &format!("/runs/{run}"), "").await;
        assert_eq!(reply.status, StatusCode::OK, "{}", reply.body);
        let record = reply.json();
        if done(record["status"].as_str().unwrap()) {
            return record;
        }
        assert!(started.elapsed() < Duration::from_secs(120), "run {run} stuck in {}", record["status"]);
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

fn finished(status: &str) -> bool {
    status == "Done" || status == "Failed"
}

async fn submit(app: &Router, body: Value) -> String {
    let reply = call(app, "POST", "/runs", body.to_string()).await;
    assert_eq!(reply.status, StatusCode::ACCEPTED, "{}", reply.body);
    reply.json()["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn put_then_get_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let text = tiny_blend(1, 4).to_canonical_json();
    let put = call(&app, "PUT", "/networks/plant", text.clone()).await;
    assert_eq!(put.status, StatusCode::OK, "{}", put.body);
    assert_eq!(put.json(), json!({ "id": "plant", "version": 1 }));
    let get = call(&app, "GET", "/networks/plant", "").await;
    assert_eq!(get.status, StatusCode::OK);
    assert_eq!(get.body, text);
    assert_eq!(get.headers["x-version"], "1");

    // Non-canonical input is stored canonically.
    let compact = serde_json::to_string(&tiny_blend(2, 4)).unwrap();
    assert_eq!(call(&app, "PUT", "/networks/plant", compact).await.json()["version"], 2);
    assert_eq!(call(&app, "GET", "/networks/plant", "").await.body, tiny_blend(2, 4).to_canonical_json());
    assert_eq!(call(&app, "GET", "/networks", "").await.json(), json!([{ "id": "plant", "version": 2 }]));
}

#[tokio::test]
async fn unknown_ids_and_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    assert_eq!(call(&app, "GET", "/networks/nope", "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "DELETE", "/networks/nope", "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/runs/nope", "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/runs/nope/solution", "").await.status, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "PUT", "/networks/a.b", "{}").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "PUT", "/networks/a", "{not json").await.status, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", "/runs", r#"{"kind":"Sideways"}"#).await.status, StatusCode::BAD_REQUEST);

    let missing = call(&app, "POST", "/runs", json!({ "kind": "Optimize", "network": "ghost" }).to_string()).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND, "{}", missing.body);
    assert_eq!(call(&app, "GET", "/runs", "").await.json(), json!([]));
}

#[tokio::test]
async fn invalid_networks_come_back_with_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let mut net = tiny_blend(3, 4);
    net.edges.push(waternet::network::Edge::new("D", "NOWHERE"));
    let reply = call(&app, "PUT", "/networks/broken", net.to_canonical_json()).await;
    assert_eq!(reply.status, StatusCode::UNPROCESSABLE_ENTITY);
    let violations = reply.json()["report"]["violations"].as_array().unwrap().clone();
    assert!(!violations.is_empty());
    assert_eq!(call(&app, "GET", "/networks/broken", "").await.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn optimize_run_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let net = generate(Shape::Refinery, Variant::Current, 4).unwrap();
    call(&app, "PUT", "/networks/refinery", net.to_canonical_json()).await;
    let mut request = shape_config(Shape::Refinery).request();
    request.build.conflicts.clear();
    let id = submit(&app, json!({ "kind": "Optimize", "network": "refinery", "config": request })).await;
    let record = wait_for(&app, &id, finished).await;
    assert_eq!(record["status"], "Done", "{record}");
    assert_eq!(record["kind"], "Optimize");
    assert!(record["finished_at"].as_u64().unwrap() >= record["started_at"].as_u64().unwrap());

    let reply = call(&app, "GET", &format!("/runs/{id}/solution"), "").await;
    assert_eq!(reply.status, StatusCode::OK, "{}", reply.body);
    let stored = Network::from_json(&call(&app, "GET", "/networks/refinery", "").await.body).unwrap();
    let direct = waternet::optimize(&stored, &request).unwrap();
    assert_eq!(reply.body, direct.to_json());
}

#[tokio::test]
async fn trials_and_compare_runs_finish() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
    call(&app, "PUT", "/networks/b", tiny_blend(6, 4).to_canonical_json()).await;
    let trials = json!({ "n_trials": 3, "seed": 9 });
    let t = submit(&app, json!({ "kind": "Trials", "network": "a", "config": trials })).await;
    let c = submit(&app, json!({ "kind": "Compare", "network": "a", "updated": "b", "config": trials })).await;
    let t = wait_for(&app, &t, finished).await;
    let c = wait_for(&app, &c, finished).await;
    assert_eq!(t["status"], "Done", "{t}");
    assert_eq!(t["result"]["n_trials"], 3);
    assert_eq!(c["status"], "Done", "{c}");
    assert_eq!(c["result"]["per_trial"].as_array().unwrap().len(), 3);
    // Only optimize runs have a solution.
    assert_eq!(call(&app, "GET", &format!("/runs/{}/solution", t["id"].as_str().unwrap()), "").await.status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn failed_runs_carry_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
    let mut request = OptimizeRequest::default();
    request.limits.max_time = 0.0;
    let id = submit(&app, json!({ "kind": "Optimize", "network": "a", "config": request })).await;
    let record = wait_for(&app, &id, finished).await;
    assert_eq!(record["status"], "Failed");
    assert!(record["error"].as_str().unwrap().contains("limits"));
    assert!(record.get("result").is_none());
}

#[tokio::test]
async fn runs_use_the_network_as_submitted() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let first = tiny_blend(7, 4);
    call(&app, "PUT", "/networks/a", first.to_canonical_json()).await;
    let id = submit(&app, json!({ "kind": "Optimize", "network": "a" })).await;
    call(&app, "PUT", "/networks/a", tiny_blend(8, 4).to_canonical_json()).await;
    let record = wait_for(&app, &id, finished).await;
    assert_eq!(serde_json::from_value::<Network>(record["snapshots"]["a"].clone()).unwrap(), first);
    let expected = waternet::optimize(&first, &OptimizeRequest::default()).unwrap();
    assert_eq!(call(&app, "GET", &format!("/runs/{id}/solution"), "").await.body, expected.to_json());
    assert_eq!(call(&app, "GET", "/networks/a", "").await.body, tiny_blend(8, 4).to_canonical_json());
}

/// Enough identical trials to keep one worker busy for a while.
fn long_trials(network: &str) -> Value {
    json!({ "kind": "Trials", "network": network, "config": { "n_trials": 3000, "seed": 1 } })
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn networks_in_use_cannot_be_deleted() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
    call(&app, "PUT", "/networks/spare", tiny_blend(6, 4).to_canonical_json()).await;
    let id = submit(&app, long_trials("a")).await;
    let record = wait_for(&app, &id, |s| s != "Queued").await;
    assert_eq!(record["status"], "Running");
    let reply = call(&app, "DELETE", "/networks/a", "").await;
    assert_eq!(reply.status, StatusCode::CONFLICT, "{}", reply.body);
    assert_eq!(call(&app, "DELETE", "/networks/spare", "").await.status, StatusCode::NO_CONTENT);
    assert_eq!(wait_for(&app, &id, finished).await["status"], "Done");
    assert_eq!(call(&app, "DELETE", "/networks/a", "").await.status, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, "GET", "/networks", "").await.json(), json!([]));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn full_queue_rejects_submissions() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = config(&dir);
    config.workers = 1;
    config.queue_limit = 1;
    let app = app(&config).unwrap();
    call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
    let first = submit(&app, long_trials("a")).await;
    wait_for(&app, &first, |s| s != "Queued").await;
    let second = submit(&app, json!({ "kind": "Optimize", "network": "a" })).await;
    let third = call(&app, "POST", "/runs", json!({ "kind": "Optimize", "network": "a" }).to_string()).await;
    assert_eq!(third.status, StatusCode::TOO_MANY_REQUESTS, "{}", third.body);
    assert_eq!(wait_for(&app, &second, finished).await["status"], "Done");
    wait_for(&app, &first, finished).await;
    submit(&app, json!({ "kind": "Optimize", "network": "a" })).await;
}

#[tokio::test]
async fn done_runs_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (id, before) = {
        let app = app(&config(&dir)).unwrap();
        call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
        let id = submit(&app, json!({ "kind": "Optimize", "network": "a" })).await;
        wait_for(&app, &id, finished).await;
        let before = call(&app, "GET", &format!("/runs/{id}"), "").await.body;
        (id, before)
    };
    let app = app(&config(&dir)).unwrap();
    let after = call(&app, "GET", &format!("/runs/{id}"), "").await;
    assert_eq!(after.status, StatusCode::OK);
    assert_eq!(after.body, before);
    assert_eq!(call(&app, "GET", &format!("/runs/{id}/solution"), "").await.status, StatusCode::OK);
}

#[tokio::test]
async fn interrupted_runs_are_resolved_on_restart() {
    let dir = tempfile::tempdir().unwrap();
    let (queued, running) = {
        let app = app(&config(&dir)).unwrap();
        call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
        let id = submit(&app, json!({ "kind": "Optimize", "network": "a" })).await;
        let done = wait_for(&app, &id, finished).await;
        // Forge the records a crash would leave behind.
        let mut queued = done.clone();
        for key in ["result", "started_at", "finished_at"] {
            queued.as_object_mut().unwrap().remove(key);
        }
        queued["status"] = json!("Queued");
        queued["id"] = json!("q1");
        let mut running = queued.clone();
        running["status"] = json!("Running");
        running["id"] = json!("r1");
        (queued, running)
    };
    for record in [&queued, &running] {
        let path = dir.path().join("runs").join(format!("{}.json", record["id"].as_str().unwrap()));
        std::fs::write(path, serde_json::to_string_pretty(record).unwrap()).unwrap();
    }
    let app = app(&config(&dir)).unwrap();
    let q = wait_for(&app, "q1", finished).await;
    assert_eq!(q["status"], "Done");
    let r = call(&app, "GET", "/runs/r1", "").await.json();
    assert_eq!(r["status"], "Failed");
    assert!(r["error"].as_str().unwrap().contains("restart"));
}

#[tokio::test]
async fn a_corrupt_document_does_not_affect_the_others() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let text = tiny_blend(5, 4).to_canonical_json();
    call(&app, "PUT", "/networks/good", text.clone()).await;
    std::fs::write(dir.path().join("networks/bad.json"), "{\"version\": 3, \"docum").unwrap();
    let reply = call(&app, "GET", "/networks/bad", "").await;
    assert_eq!(reply.status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(reply.json()["id"], "bad");
    assert_eq!(call(&app, "GET", "/networks/good", "").await.body, text);
    let listed = call(&app, "GET", "/networks", "").await.json();
    assert_eq!(listed, json!([{ "id": "bad", "corrupt": true }, { "id": "good", "version": 1 }]));
    let run = call(&app, "POST", "/runs", json!({ "kind": "Optimize", "network": "bad" }).to_string()).await;
    assert_eq!(run.status, StatusCode::INTERNAL_SERVER_ERROR);
    assert_eq!(run.json()["id"], "bad");
    // Writing a new version repairs it.
    assert_eq!(call(&app, "PUT", "/networks/bad", text).await.status, StatusCode::OK);
}

#[tokio::test]
async fn storage_failures_ask_the_client_to_retry() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let networks = dir.path().join("networks");
    std::fs::remove_dir_all(&networks).unwrap();
    std::fs::write(&networks, "").unwrap();
    let reply = call(&app, "PUT", "/networks/a", tiny_blend(5, 4).to_canonical_json()).await;
    assert_eq!(reply.status, StatusCode::SERVICE_UNAVAILABLE, "{}", reply.body);
    assert_eq!(reply.headers["retry-after"], "5");
    assert_eq!(call(&app, "GET", "/networks", "").await.status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_puts_keep_one_whole_document() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&config(&dir)).unwrap();
    let texts: Vec<String> = (0..16).map(|seed| tiny_blend(seed, 4).to_canonical_json()).collect();
    let tasks: Vec<_> = texts
        .iter()
        .map(|text| {
            let (app, text) = (app.clone(), text.clone());
            tokio::spawn(async move { call(&app, "PUT", "/networks/shared", text).await.json()["version"].as_u64().unwrap() })
        })
        .collect();
    let mut versions = Vec::new();
    for task in tasks {
        versions.push(task.await.unwrap());
    }
    versions.sort();
    assert_eq!(versions, (1..=16).collect::<Vec<u64>>());
    let last = call(&app, "GET", "/networks/shared", "").await;
    assert_eq!(last.headers["x-version"], "16");
    assert!(texts.contains(&last.body));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("networks")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(leftovers, ["shared.json"]);
}
