use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use chrono::{DateTime, NaiveDate, Utc};
use lineup_core::ingestion::DataStore;
use lineup_core::model::FittedModel;
use lineup_core::pipeline::FitConfig;
use lineup_core::skills::WeightSet;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{ApiError, ErrorBody};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobKind {
    Fit,
    Optimize,
    Evaluate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Queued,
    Running,
    Done,
    Failed,
}

impl JobStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobStatus::Done | JobStatus::Failed)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JobRecord {
    pub job_id: String,
    pub kind: JobKind,
    pub status: JobStatus,
    pub submitted_at: DateTime<Utc>,
    /// Present iff `status` is done.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

pub struct AppState {
    pub store: DataStore,
    pub weights: WeightSet,
    pub artifact_dir: PathBuf,
    models: RwLock<HashMap<String, Arc<FittedModel>>>,
    jobs: RwLock<BTreeMap<String, JobRecord>>,
    next_job: AtomicU64,
    /// Serializes writes to the artifact directory.
    pub(crate) write_lock: tokio::sync::Mutex<()>,
}

/// What a model id is derived from.
#[derive(Serialize)]
struct ModelKey<'a> {
    team: &'a str,
    train_until: Option<NaiveDate>,
    config: &'a FitConfig,
    weights: &'a WeightSet,
    data: (usize, Option<&'a str>),
}

impl AppState {
    pub fn new(store: DataStore, weights: WeightSet, artifact_dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let artifact_dir = artifact_dir.into();
        std::fs::create_dir_all(&artifact_dir)?;
        Ok(AppState {
            store,
            weights,
            artifact_dir,
            models: RwLock::new(HashMap::new()),
            jobs: RwLock::new(BTreeMap::new()),
            next_job: AtomicU64::new(1),
            write_lock: tokio::sync::Mutex::new(()),
        })
    }

    /// Content address of a fit request: hash of team, config, training
    /// window and the data it would see.
    pub fn model_id(&self, team: &str, train_until: Option<NaiveDate>, config: &FitConfig) -> String {
        let key = ModelKey {
            team,
            train_until,
            config,
            weights: &self.weights,
            data: (
                self.store.matches().len(),
                self.store.matches().last().map(|m| m.match_id.as_str()),
            ),
        };
        let bytes = serde_json::to_vec(&key).expect("model key serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(12).map(|b| format!("{b:02x}")).collect()
    }

    fn artifact_path(&self, id: &str) -> PathBuf {
        self.artifact_dir.join(format!("{id}.json"))
    }

    pub fn model(&self, id: &str) -> Result<Arc<FittedModel>, ApiError> {
        if let Some(m) = self.models.read().expect("model cache poisoned").get(id) {
            return Ok(m.clone());
        }
        if !id.chars().all(|c| c.is_ascii_hexdigit()) {
            return Err(ApiError::not_found("model", id));
        }
        let path = self.artifact_path(id);
        if !path.exists() {
            return Err(ApiError::not_found("model", id));
        }
        let m = Arc::new(FittedModel::load(&path)?);
        self.models
            .write()
            .expect("model cache poisoned")
            .insert(id.to_owned(), m.clone());
        Ok(m)
    }

    pub fn has_model(&self, id: &str) -> bool {
        self.models.read().expect("model cache poisoned").contains_key(id) || self.artifact_path(id).exists()
    }

    pub(crate) fn store_model(&self, id: &str, model: FittedModel) -> Result<(), ApiError> {
        model.save(self.artifact_path(id))?;
        self.models
            .write()
            .expect("model cache poisoned")
            .insert(id.to_owned(), Arc::new(model));
        Ok(())
    }

    pub fn submit(&self, kind: JobKind) -> String {
        let job_id = format!("job-{:06}", self.next_job.fetch_add(1, Ordering::Relaxed));
        let rec = JobRecord {
            job_id: job_id.clone(),
            kind,
            status: JobStatus::Queued,
            submitted_at: Utc::now(),
            result: None,
            error: None,
        };
        self.jobs
            .write()
            .expect("job table poisoned")
            .insert(job_id.clone(), rec);
        job_id
    }

    pub fn job(&self, id: &str) -> Option<JobRecord> {
        self.jobs.read().expect("job table poisoned").get(id).cloned()
    }

    /// Moves a job along; terminal states never change again.
    pub(crate) fn transition(&self, id: &str, outcome: Option<Result<Value, ApiError>>) {
        let mut jobs = self.jobs.write().expect("job table poisoned");
        let Some(rec) = jobs.get_mut(id) else { return };
        if rec.status.is_terminal() {
            return;
        }
        match outcome {
            None => rec.status = JobStatus::Running,
            Some(Ok(v)) => {
                rec.status = JobStatus::Done;
                rec.result = Some(v);
            }
            Some(Err(e)) => {
                rec.status = JobStatus::Failed;
                rec.error = Some(e.body());
            }
        }
    }
}
