//! HTTP service: stores networks as canonical JSON documents and runs
//! optimizations, trials and comparisons on a queued worker pool.
//!
//! | Method | Path | |
//! |---|---|---|
//! | `GET` | `/networks` | ids and versions |
//! | `PUT` | `/networks/{id}` | store a network, returns its new version |
//! | `GET` | `/networks/{id}` | canonical network document |
//! | `DELETE` | `/networks/{id}` | 409 while a queued or running run uses it |
//! | `POST` | `/runs` | submit a [`runs::RunRequest`], returns the run id |
//! | `GET` | `/runs` | ids and statuses |
//! | `GET` | `/runs/{id}` | the [`runs::RunRecord`] |
//! | `GET` | `/runs/{id}/solution` | solution of a finished optimize run |

mod api;
pub mod runs;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;

use runs::Executor;
use store::{Store, StoreError};

pub const DEFAULT_QUEUE_LIMIT: usize = 64;

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub store: PathBuf,
    pub workers: usize,
    /// Runs allowed to wait for a worker before submissions get 429.
    pub queue_limit: usize,
}

impl ServiceConfig {
    pub fn new(store: impl Into<PathBuf>) -> Self {
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        ServiceConfig { store: store.into(), workers, queue_limit: DEFAULT_QUEUE_LIMIT }
    }
}

#[derive(Clone, Debug)]
pub struct AppState {
    pub store: Arc<Store>,
    pub executor: Arc<Executor>,
}

/// Opens the store, resumes runs left queued by an earlier process and
/// returns the router. Must be called inside a Tokio runtime.
pub fn app(config: &ServiceConfig) -> Result<Router, StoreError> {
    let store = Arc::new(Store::open(&config.store)?);
    let executor = Executor::new(Arc::clone(&store), config.workers, config.queue_limit);
    executor.recover()?;
    Ok(api::router(AppState { store, executor }))
}

pub async fn serve(config: &ServiceConfig, bind: SocketAddr) -> std::io::Result<()> {
    let router = app(config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(bind).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router).await
}
