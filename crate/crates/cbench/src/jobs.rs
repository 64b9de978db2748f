//! Background jobs with polling and cooperative cancellation.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use dashmap::DashMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::ErrorBody;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Succeeded { result: Value },
    Failed { error: ErrorBody },
    Cancelled,
}

#[derive(Debug)]
pub struct Job {
    pub id: String,
    pub session: String,
    pub kind: String,
    /// Units of work expected (bootstrap iterations; 1 for a single run).
    pub total: usize,
    pub done: AtomicUsize,
    pub cancel: AtomicBool,
    status: Mutex<JobStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub id: String,
    pub session: String,
    pub kind: String,
    pub done: usize,
    pub total: usize,
    #[serde(flatten)]
    pub status: JobStatus,
}

impl Job {
    pub fn status(&self) -> JobStatus {
        self.status.lock().expect("job lock").clone()
    }

    pub fn finish(&self, status: JobStatus) {
        *self.status.lock().expect("job lock") = status;
    }

    pub fn view(&self) -> JobView {
        JobView {
            id: self.id.clone(),
            session: self.session.clone(),
            kind: self.kind.clone(),
            done: self.done.load(Ordering::Relaxed),
            total: self.total,
            status: self.status(),
        }
    }
}

#[derive(Default)]
pub struct JobStore {
    jobs: DashMap<String, Arc<Job>>,
}

impl JobStore {
    pub fn start(&self, session: &str, kind: &str, total: usize) -> Arc<Job> {
        let id = format!("{:016x}", rand::rng().random::<u64>());
        let job = Arc::new(Job {
            id: id.clone(),
            session: session.to_string(),
            kind: kind.to_string(),
            total,
            done: AtomicUsize::new(0),
            cancel: AtomicBool::new(false),
            status: Mutex::new(JobStatus::Running),
        });
        self.jobs.insert(id, Arc::clone(&job));
        job
    }

    /// The job, if it exists and belongs to `session`.
    pub fn get(&self, session: &str, id: &str) -> Option<Arc<Job>> {
        self.jobs
            .get(id)
            .filter(|j| j.session == session)
            .map(|j| Arc::clone(&j))
    }
}
