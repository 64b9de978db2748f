#![allow(dead_code)]

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

use cbench::api::{router, AppState};
use cbench::jobs::JobStore;
use cbench::session::SessionStore;

pub struct Server {
    pub app: Router,
    pub dir: tempfile::TempDir,
}

impl Server {
    pub fn new() -> Server {
        let dir = tempfile::tempdir().unwrap();
        let app = app_at(dir.path());
        Server { app, dir }
    }

    /// A fresh process over the same data directory.
    pub fn restart(&self) -> Router {
        app_at(self.dir.path())
    }
}

pub fn app_at(path: &std::path::Path) -> Router {
    router(Arc::new(AppState {
        sessions: SessionStore::open(path).unwrap(),
        jobs: JobStore::default(),
    }))
}

pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub bytes: Vec<u8>,
}

impl Reply {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.bytes));
        })
    }

    pub fn text(&self) -> String {
        String::from_utf8(self.bytes.clone()).unwrap()
    }

    #[track_caller]
    pub fn ok(self) -> Reply {
        assert!(self.status.is_success(), "{}: {}", self.status, String::from_utf8_lossy(&self.bytes));
        self
    }
}

pub async fn send(app: &Router, method: Method, uri: &str, content_type: &str, body: Vec<u8>) -> Reply {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(Body::from(body))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let content_type = resp
        .headers()
        .get("content-type")
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply {
        status,
        content_type,
        bytes,
    }
}

pub async fn get(app: &Router, uri: &str) -> Reply {
    send(app, Method::GET, uri, "application/json", Vec::new()).await
}

pub async fn post(app: &Router, uri: &str, body: Value) -> Reply {
    send(app, Method::POST, uri, "application/json", serde_json::to_vec(&body).unwrap()).await
}

pub async fn post_csv(app: &Router, uri: &str, csv: &str) -> Reply {
    send(app, Method::POST, uri, "text/csv", csv.as_bytes().to_vec()).await
}

pub async fn new_session(app: &Router) -> String {
    let r = send(app, Method::POST, "/api/v1/sessions", "application/json", Vec::new()).await;
    assert_eq!(r.status, StatusCode::CREATED);
    r.json()["id"].as_str().unwrap().to_string()
}

/// Polls a job until it leaves the running state.
pub async fn wait_job(app: &Router, session: &str, job: &str) -> Value {
    let start = Instant::now();
    loop {
        let v = get(app, &format!("/api/v1/sessions/{session}/jobs/{job}")).await.ok().json();
        if v["status"] != "running" {
            return v;
        }
        assert!(start.elapsed() < Duration::from_secs(120), "job {job} never finished");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

/// Starts a learn job and waits for it.
pub async fn learn(app: &Router, session: &str, body: Value) -> Value {
    let r = post(app, &format!("/api/v1/sessions/{session}/structure/learn"), body).await;
    assert_eq!(r.status, StatusCode::ACCEPTED, "{}", r.text());
    let job = r.json()["job"].as_str().unwrap().to_string();
    wait_job(app, session, &job).await
}

/// Rows repeated by count.
pub fn csv_from_counts(header: &str, counts: &[(&str, usize)]) -> String {
    let mut s = format!("{header}\n");
    for (row, n) in counts {
        for _ in 0..*n {
            s.push_str(row);
            s.push('\n');
        }
    }
    s
}

/// Two binary columns with P(A=t) = 0.5, P(B=t) = 0.55 and a strong
/// dependence between them.
pub fn two_column(scale: usize) -> String {
    csv_from_counts(
        "A,B",
        &[("t,t", 45 * scale), ("t,f", 5 * scale), ("f,t", 10 * scale), ("f,f", 40 * scale)],
    )
}

/// A treatment `D`, a risk factor `X` and an outcome `U` that depends on
/// both.
pub fn decision_data() -> String {
    csv_from_counts(
        "D,X,U",
        &[
            ("a,lo,good", 40),
            ("a,lo,bad", 10),
            ("a,hi,good", 15),
            ("a,hi,bad", 35),
            ("b,lo,good", 30),
            ("b,lo,bad", 20),
            ("b,hi,good", 30),
            ("b,hi,bad", 20),
        ],
    )
}

/// Five loosely coupled variables; slow enough to bootstrap that a job
/// can be interrupted.
pub fn five_column(rows: usize) -> String {
    let mut s = String::from("V,W,X,Y,Z\n");
    for i in 0..rows {
        let v = i % 3;
        let w = (i / 3 + v) % 2;
        let x = (i * 7 + w) % 3;
        let y = (i / 5 + x) % 2;
        let z = (i * 11 + y + v) % 3;
        s.push_str(&format!("v{v},w{w},x{x},y{y},z{z}\n"));
    }
    s
}
