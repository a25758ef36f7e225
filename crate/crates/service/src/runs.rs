//! Run records and the queued executor that works them off.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::Semaphore;
use waternet::network::Network;
use waternet::scenario::{compare_networks, run_trials, TrialConfig};
use waternet::OptimizeRequest;

use crate::store::{Collection, Store, StoreError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunKind {
    Optimize,
    Trials,
    Compare,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    Queued,
    Running,
    Done,
    Failed,
}

/// Body of `POST /runs`. `network` names a stored network; a comparison
/// also names the `updated` one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum RunRequest {
    Optimize {
        network: String,
        #[serde(default)]
        config: OptimizeRequest,
    },
    Trials {
        network: String,
        #[serde(default)]
        config: TrialConfig,
    },
    Compare {
        network: String,
        updated: String,
        #[serde(default)]
        config: TrialConfig,
    },
}

impl RunRequest {
    pub fn kind(&self) -> RunKind {
        match self {
            RunRequest::Optimize { .. } => RunKind::Optimize,
            RunRequest::Trials { .. } => RunKind::Trials,
            RunRequest::Compare { .. } => RunKind::Compare,
        }
    }

    pub fn network_ids(&self) -> Vec<&str> {
        match self {
            RunRequest::Optimize { network, .. } | RunRequest::Trials { network, .. } => vec![network],
            RunRequest::Compare { network, updated, .. } => vec![network, updated],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub kind: RunKind,
    pub status: RunStatus,
    pub request: RunRequest,
    /// Networks as they were when the run was submitted, by id.
    pub snapshots: BTreeMap<String, Network>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Milliseconds since the Unix epoch.
    pub submitted_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub started_at: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_at: Option<u64>,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("run serialization is infallible");
        text.push('\n');
        text
    }
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[derive(Debug, Error)]
pub enum SubmitError {
    #[error("run queue is full ({0} waiting)")]
    QueueFull(usize),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Executes one request against its snapshots. Returns the result document.
pub fn execute(request: &RunRequest, snapshots: &BTreeMap<String, Network>) -> Result<serde_json::Value, String> {
    let net = |id: &String| snapshots.get(id).ok_or_else(|| format!("no snapshot of `{id}`"));
    let value = match request {
        RunRequest::Optimize { network, config } => {
            let solution = waternet::optimize(net(network)?, config).map_err(|e| e.to_string())?;
            serde_json::to_value(solution)
        }
        RunRequest::Trials { network, config } => {
            let result = run_trials(config, net(network)?, 1).map_err(|e| e.to_string())?;
            serde_json::to_value(result)
        }
        RunRequest::Compare { network, updated, config } => {
            let result = compare_networks(net(network)?, net(updated)?, config, 1).map_err(|e| e.to_string())?;
            serde_json::to_value(result)
        }
    };
    value.map_err(|e| e.to_string())
}

/// Queue in front of a fixed number of workers. Records are persisted on
/// every status change.
#[derive(Debug)]
pub struct Executor {
    store: Arc<Store>,
    workers: Arc<Semaphore>,
    queue_limit: usize,
    queued: AtomicUsize,
    /// Queued or running runs per referenced network id.
    active: Mutex<HashMap<String, usize>>,
}

impl Executor {
    pub fn new(store: Arc<Store>, workers: usize, queue_limit: usize) -> Arc<Self> {
        Arc::new(Executor { store, workers: Arc::new(Semaphore::new(workers)), queue_limit, queued: AtomicUsize::new(0), active: Mutex::new(HashMap::new()) })
    }

    pub fn is_referenced(&self, network: &str) -> bool {
        self.active.lock().unwrap_or_else(|e| e.into_inner()).get(network).is_some_and(|&n| n > 0)
    }

    fn save(&self, record: &RunRecord) -> Result<(), StoreError> {
        self.store.write(Collection::Runs, &record.id, record.to_json().as_bytes())
    }

    fn track(&self, record: &RunRecord, delta: isize) {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        for id in record.snapshots.keys() {
            let count = active.entry(id.clone()).or_default();
            *count = count.saturating_add_signed(delta);
            if *count == 0 {
                active.remove(id);
            }
        }
    }

    /// Stores a new queued run and schedules it.
    pub fn submit(self: &Arc<Self>, request: RunRequest, snapshots: BTreeMap<String, Network>) -> Result<RunRecord, SubmitError> {
        let waiting = self.queued.fetch_add(1, Ordering::SeqCst);
        if waiting >= self.queue_limit {
            self.queued.fetch_sub(1, Ordering::SeqCst);
            return Err(SubmitError::QueueFull(waiting));
        }
        let record = RunRecord {
            id: uuid::Uuid::new_v4().simple().to_string(),
            kind: request.kind(),
            status: RunStatus::Queued,
            request,
            snapshots,
            result: None,
            error: None,
            submitted_at: now_ms(),
            started_at: None,
            finished_at: None,
        };
        if let Err(e) = self.save(&record) {
            self.queued.fetch_sub(1, Ordering::SeqCst);
            return Err(e.into());
        }
        self.schedule(record.clone());
        Ok(record)
    }

    fn schedule(self: &Arc<Self>, mut record: RunRecord) {
        self.track(&record, 1);
        let this = Arc::clone(self);
        tokio::spawn(async move {
            let _permit = this.workers.clone().acquire_owned().await.expect("worker semaphore is never closed");
            this.queued.fetch_sub(1, Ordering::SeqCst);
            record.status = RunStatus::Running;
            record.started_at = Some(now_ms());
            if let Err(e) = this.save(&record) {
                log::warn!("run {}: cannot record start: {e}", record.id);
            }
            let (request, snapshots) = (record.request.clone(), record.snapshots.clone());
            let outcome = tokio::task::spawn_blocking(move || execute(&request, &snapshots)).await.unwrap_or_else(|e| Err(format!("run panicked: {e}")));
            match outcome {
                Ok(value) => {
                    record.status = RunStatus::Done;
                    record.result = Some(value);
                }
                Err(message) => {
                    record.status = RunStatus::Failed;
                    record.error = Some(message);
                }
            }
            record.finished_at = Some(now_ms());
            if let Err(e) = this.save(&record) {
                log::error!("run {}: cannot record result: {e}", record.id);
            }
            this.track(&record, -1);
        });
    }

    /// Picks up runs left by a previous process: queued ones are scheduled
    /// again, running ones were interrupted and are marked failed.
    pub fn recover(self: &Arc<Self>) -> Result<(), StoreError> {
        for id in self.store.list(Collection::Runs)? {
            let bytes = self.store.read(Collection::Runs, &id)?;
            let Ok(mut record) = serde_json::from_slice::<RunRecord>(&bytes) else {
                log::warn!("run {id}: unreadable record left as is");
                continue;
            };
            match record.status {
                RunStatus::Queued => {
                    self.queued.fetch_add(1, Ordering::SeqCst);
                    self.schedule(record);
                }
                RunStatus::Running => {
                    record.status = RunStatus::Failed;
                    record.error = Some("interrupted by a service restart".into());
                    record.finished_at = Some(now_ms());
                    self.save(&record)?;
                }
                RunStatus::Done | RunStatus::Failed => {}
            }
        }
        Ok(())
    }
}
