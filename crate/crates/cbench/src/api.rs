//! HTTP routes under `/api/v1`. Bodies are JSON except CSV uploads and
//! exports; failures carry `{code, message, detail}`.

use std::sync::atomic::Ordering;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query as UrlQuery, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use cbench_core::assoc::{build_assoc, link_communities, AssocMeasure, Linkage};
use cbench_core::dataset::{export_csv, load_csv, summarize, ColumnKind, CsvOptions, Dataset};
use cbench_core::decision::{learn_policy, DecisionSpec, PolicyOptions};
use cbench_core::fit::{fit, FitMethod};
use cbench_core::graph::{export_edgelist, import_edgelist};
use cbench_core::infer::{query, Query, QueryOptions};
use cbench_core::learn::{averaged_network, validate, StructureSource, ValidationMode};
use cbench_core::Error as CoreError;

use crate::bundle::build_bundle;
use crate::error::{ApiError, ApiResult};
use crate::jobs::{JobStatus, JobStore};
use crate::pipeline::{learn_structure, preprocess, LearnRequest, PreprocessStep};
use crate::session::{Session, SessionStore};

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 512 * 1024 * 1024;

pub struct AppState {
    pub sessions: SessionStore,
    pub jobs: JobStore,
}

pub type Shared = Arc<AppState>;

pub fn router(state: Shared) -> Router {
    let session = Router::new()
        .route("/", get(overview))
        .route("/dataset", post(upload))
        .route("/preprocess", post(preprocess_route))
        .route("/summary/{column}", get(summary))
        .route("/assoc", post(assoc))
        .route("/assoc/communities", post(communities))
        .route("/structure/learn", post(start_learn))
        .route("/structure/threshold", post(threshold))
        .route("/structure/edit", post(edit))
        .route("/structure/import", post(import))
        .route("/jobs/{job}", get(job_status).delete(cancel_job))
        .route("/jobs/{job}/cancel", post(cancel_job))
        .route("/validate", post(validate_route))
        .route("/fit", post(fit_route))
        .route("/query", post(query_route))
        .route("/decision", post(decision))
        .route("/decision/policy", post(policy))
        .route("/export/{kind}", get(export))
        .route("/publish", post(publish));
    Router::new()
        .route("/api/v1/sessions", post(create_session))
        .nest("/api/v1/sessions/{id}", session)
        .fallback(|| async { ApiError::not_found("no such route") })
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .with_state(state)
}

/// Runs `f` on the locked session off the async runtime.
async fn read<T: Send + 'static>(
    st: &Shared,
    id: &str,
    f: impl FnOnce(&Session) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let handle = st.sessions.get(id)?;
    tokio::task::spawn_blocking(move || {
        let s = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        f(&s)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

/// Like [`read`] but persists the session when `f` succeeds. `f` works on a
/// copy, so a failure leaves the session untouched.
async fn write<T: Send + 'static>(
    st: &Shared,
    id: &str,
    f: impl FnOnce(&mut Session) -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    let handle = st.sessions.get(id)?;
    let st = Arc::clone(st);
    tokio::task::spawn_blocking(move || {
        let mut s = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
        let mut draft = s.clone();
        let out = f(&mut draft)?;
        st.sessions.save(&draft)?;
        *s = draft;
        Ok(out)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))?
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn parse_body<T: serde::de::DeserializeOwned + Default>(body: &Bytes) -> ApiResult<T> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        Ok(serde_json::from_slice(body)?)
    }
}

async fn create_session(State(st): State<Shared>) -> ApiResult<impl IntoResponse> {
    let id = st.sessions.create()?;
    Ok((StatusCode::CREATED, Json(json!({ "id": id }))))
}

#[derive(Serialize)]
struct ColumnInfo {
    name: String,
    kind: ColumnKind,
    levels: Option<Vec<String>>,
    missing: usize,
}

fn dataset_info(ds: &Dataset) -> Value {
    let columns: Vec<ColumnInfo> = ds
        .columns()
        .iter()
        .map(|c| ColumnInfo {
            name: c.name().to_string(),
            kind: c.kind(),
            levels: c.levels().map(<[String]>::to_vec),
            missing: c.missing_count(),
        })
        .collect();
    json!({
        "name": ds.name(),
        "rows": ds.n_rows(),
        "columns": columns,
        "interventions": ds.interventions(),
    })
}

async fn overview(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    read(&st, &id, |s| {
        Ok(Json(json!({
            "id": s.id,
            "version": s.version,
            "revision": s.revision,
            "dataset": s.dataset.as_ref().map(dataset_info),
            "dag": s.dag,
            "fitted": s.fitted.is_some(),
            "decision": s.decision,
            "history": s.history,
        })))
    })
    .await
}

async fn upload(State(st): State<Shared>, Path(id): Path<String>, req: Request) -> ApiResult<Json<Value>> {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let mut options = CsvOptions::default();
    let bytes = if is_multipart {
        let mut mp = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        let mut file = None;
        while let Some(field) = mp.next_field().await.map_err(|e| ApiError::bad_request(e.to_string()))? {
            let name = field.name().unwrap_or_default().to_string();
            let data = field.bytes().await.map_err(|e| ApiError::bad_request(e.to_string()))?;
            match name.as_str() {
                "file" => file = Some(data),
                "options" => options = serde_json::from_slice(&data)?,
                _ => {}
            }
        }
        file.ok_or_else(|| ApiError::bad_request("multipart upload needs a `file` field"))?
    } else {
        Bytes::from_request(req, &())
            .await
            .map_err(|e| ApiError::bad_request(e.to_string()))?
    };
    write(&st, &id, move |s| {
        let ds = load_csv(bytes.as_ref(), &options)?;
        let info = dataset_info(&ds);
        s.set_dataset(ds);
        s.record("dataset", to_value(&options));
        Ok(Json(info))
    })
    .await
}

#[derive(Deserialize, Default)]
struct PreprocessBody {
    steps: Vec<PreprocessStep>,
}

async fn preprocess_route(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: PreprocessBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let mut ds = s.dataset()?.clone();
        for step in &body.steps {
            ds = preprocess(&ds, step)?;
        }
        let info = dataset_info(&ds);
        s.set_dataset(ds);
        s.record("preprocess", to_value(&body.steps));
        Ok(Json(info))
    })
    .await
}

async fn summary(State(st): State<Shared>, Path((id, column)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    read(&st, &id, move |s| Ok(Json(to_value(&summarize(s.dataset()?, &column)?)))).await
}

#[derive(Deserialize, Serialize)]
#[serde(default)]
struct AssocBody {
    measure: AssocMeasure,
    threshold: f64,
}

impl Default for AssocBody {
    fn default() -> Self {
        AssocBody {
            measure: AssocMeasure::CramersV,
            threshold: 0.0,
        }
    }
}

async fn assoc(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: AssocBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let g = build_assoc(s.dataset()?, body.measure, body.threshold)?;
        let out = to_value(&g);
        s.assoc = Some(g);
        s.communities = None;
        s.record("assoc", to_value(&body));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize, Serialize)]
#[serde(default)]
struct CommunityBody {
    linkage: Linkage,
}

impl Default for CommunityBody {
    fn default() -> Self {
        CommunityBody {
            linkage: Linkage::Average,
        }
    }
}

async fn communities(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: CommunityBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let g = s
            .assoc
            .as_ref()
            .ok_or_else(|| ApiError::precondition("build the association network first"))?;
        let c = link_communities(g, body.linkage);
        let out = to_value(&c);
        s.communities = Some(c);
        s.record("communities", to_value(&body));
        Ok(Json(out))
    })
    .await
}

async fn start_learn(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: LearnRequest = parse_body(&body)?;
    req.search.validate()?;
    if let Some(b) = &req.bootstrap {
        b.validate()?;
    }
    let (ds, revision) = read(&st, &id, |s| Ok((s.dataset()?.clone(), s.revision))).await?;
    let total = req.bootstrap.as_ref().map_or(1, |b| b.iterations);
    let job = st.jobs.start(&id, "learn", total);
    let view = job.view();
    let state = Arc::clone(&st);
    tokio::task::spawn_blocking(move || {
        let outcome = learn_structure(&ds, &req, Some(&job.cancel), Some(&job.done));
        let status = match outcome {
            Err(CoreError::Cancelled) => JobStatus::Cancelled,
            Err(e) => JobStatus::Failed {
                error: ApiError::from(e).body(),
            },
            Ok(_) if job.cancel.load(Ordering::Relaxed) => JobStatus::Cancelled,
            Ok(out) => {
                if req.bootstrap.is_none() {
                    job.done.store(1, Ordering::Relaxed);
                }
                match apply_learn(&state, &id, revision, &req, &out) {
                    Ok(()) => JobStatus::Succeeded { result: to_value(&out) },
                    Err(e) => JobStatus::Failed { error: e.body() },
                }
            }
        };
        job.finish(status);
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "job": view.id, "status": view.status, "total": view.total })),
    ))
}

fn apply_learn(
    st: &Shared,
    id: &str,
    revision: u64,
    req: &LearnRequest,
    out: &crate::pipeline::LearnOutcome,
) -> ApiResult<()> {
    let handle = st.sessions.get(id)?;
    let mut s = handle.lock().map_err(|_| ApiError::internal("session lock poisoned"))?;
    if s.revision != revision {
        return Err(ApiError::precondition("the dataset changed while the job was running"));
    }
    let mut draft = s.clone();
    draft.set_dag(out.dag.clone());
    draft.search = Some(req.search.clone());
    draft.bootstrap = req.bootstrap.clone();
    draft.strengths = out.strengths.clone();
    draft.record("learn", to_value(req));
    st.sessions.save(&draft)?;
    *s = draft;
    Ok(())
}

async fn job_status(
    State(st): State<Shared>,
    Path((id, job)): Path<(String, String)>,
) -> ApiResult<Json<crate::jobs::JobView>> {
    let j = st
        .jobs
        .get(&id, &job)
        .ok_or_else(|| ApiError::not_found(format!("no job `{job}`")))?;
    Ok(Json(j.view()))
}

async fn cancel_job(
    State(st): State<Shared>,
    Path((id, job)): Path<(String, String)>,
) -> ApiResult<Json<crate::jobs::JobView>> {
    let j = st
        .jobs
        .get(&id, &job)
        .ok_or_else(|| ApiError::not_found(format!("no job `{job}`")))?;
    j.cancel.store(true, Ordering::Relaxed);
    Ok(Json(j.view()))
}

#[derive(Deserialize, Serialize, Default)]
struct ThresholdBody {
    edge_threshold: Option<f64>,
    direction_threshold: Option<f64>,
}

async fn threshold(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: ThresholdBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let st_table = s
            .strengths
            .as_ref()
            .ok_or_else(|| ApiError::precondition("run a bootstrap learn first"))?;
        let mut b = s.bootstrap.clone().unwrap_or_default();
        b.edge_threshold = body.edge_threshold.unwrap_or(b.edge_threshold);
        b.direction_threshold = body.direction_threshold.unwrap_or(b.direction_threshold);
        for t in [b.edge_threshold, b.direction_threshold] {
            if !(0.0..=1.0).contains(&t) {
                return Err(ApiError::bad_request("thresholds must lie in [0, 1]"));
            }
        }
        let dag = averaged_network(st_table, b.edge_threshold, b.direction_threshold);
        let out = to_value(&dag);
        s.set_dag(dag);
        s.bootstrap = Some(b);
        s.record("threshold", to_value(&body));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
enum EditOp {
    Add,
    Remove,
    Reverse,
}

#[derive(Deserialize, Serialize)]
struct EditBody {
    op: EditOp,
    from: String,
    to: String,
}

async fn edit(State(st): State<Shared>, Path(id): Path<String>, Json(body): Json<EditBody>) -> ApiResult<Json<Value>> {
    write(&st, &id, move |s| {
        let dag = s.dag()?;
        let next = match body.op {
            EditOp::Add => dag.add_arc(&body.from, &body.to)?,
            EditOp::Remove => dag.remove_arc(&body.from, &body.to)?,
            EditOp::Reverse => dag.reverse_arc(&body.from, &body.to)?,
        };
        let out = to_value(&next);
        s.set_dag(next);
        s.record("edit", to_value(&body));
        Ok(Json(out))
    })
    .await
}

async fn import(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    write(&st, &id, move |s| {
        let nodes: Option<Vec<String>> = s
            .dataset
            .as_ref()
            .map(|d| d.variable_names().into_iter().map(String::from).collect());
        let dag = import_edgelist(&body, nodes.as_deref())?;
        let out = to_value(&dag);
        s.set_dag(dag);
        s.strengths = None;
        s.record("import", json!({ "arcs": out["arcs"] }));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize, Serialize, Default)]
#[serde(default)]
struct ValidateBody {
    mode: ValidationMode,
    seed: u64,
    /// Learn a structure per fold with this configuration instead of
    /// scoring the session's current graph.
    search: Option<cbench_core::learn::SearchConfig>,
}

async fn validate_route(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: ValidateBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let source = match &body.search {
            Some(cfg) => StructureSource::Learn(cfg.clone()),
            None => StructureSource::Fixed(s.dag()?.clone()),
        };
        let report = validate(s.dataset()?, &source, body.mode, body.seed)?;
        let out = to_value(&report);
        s.validation = Some(report);
        s.record("validate", to_value(&body));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize, Serialize)]
#[serde(default)]
struct FitBody {
    method: FitMethod,
    iss: f64,
}

impl Default for FitBody {
    fn default() -> Self {
        FitBody {
            method: FitMethod::Mle,
            iss: 1.0,
        }
    }
}

async fn fit_route(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: FitBody = parse_body(&body)?;
    write(&st, &id, move |s| {
        let bn = fit(s.dataset()?, s.dag()?, body.method, body.iss)?;
        let out = json!({ "nodes": bn.nodes(), "method": bn.method, "iss": bn.iss });
        s.fitted = Some(bn);
        s.decision = None;
        s.policy = None;
        s.record("fit", to_value(&body));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize)]
struct QueryBody {
    #[serde(flatten)]
    query: Query,
    #[serde(flatten)]
    options: QueryOptions,
}

async fn query_route(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(body): Json<QueryBody>,
) -> ApiResult<Json<Value>> {
    read(&st, &id, move |s| Ok(Json(to_value(&query(s.fitted()?, &body.query, &body.options)?)))).await
}

async fn decision(
    State(st): State<Shared>,
    Path(id): Path<String>,
    Json(spec): Json<DecisionSpec>,
) -> ApiResult<Json<Value>> {
    write(&st, &id, move |s| {
        let id = spec.build(s.fitted()?)?;
        let out = json!({ "spec": id.spec(), "assignments": id.n_assignments() });
        s.decision = Some(id.spec());
        s.policy = None;
        s.record("decision", to_value(&spec));
        Ok(Json(out))
    })
    .await
}

async fn policy(State(st): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let opts: PolicyOptions = parse_body(&body)?;
    write(&st, &id, move |s| {
        let spec = s
            .decision
            .as_ref()
            .ok_or_else(|| ApiError::precondition("set up the decision network first"))?;
        let table = learn_policy(&spec.build(s.fitted()?)?, &opts)?;
        let out = to_value(&table);
        s.policy = Some(table);
        s.record("policy", to_value(&opts));
        Ok(Json(out))
    })
    .await
}

#[derive(Deserialize)]
struct ExportParams {
    node: Option<String>,
}

fn attachment(content_type: &'static str, body: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, content_type)], body).into_response()
}

const CSV: &str = "text/csv; charset=utf-8";
const JSON: &str = "application/json";

async fn export(
    State(st): State<Shared>,
    Path((id, kind)): Path<(String, String)>,
    UrlQuery(params): UrlQuery<ExportParams>,
) -> ApiResult<Response> {
    read(&st, &id, move |s| match kind.as_str() {
        "dataset" => Ok(attachment(CSV, export_csv(s.dataset()?)?)),
        "edgelist" => Ok(attachment(CSV, export_edgelist(s.dag()?))),
        "strengths" => {
            let t = s
                .strengths
                .as_ref()
                .ok_or_else(|| ApiError::precondition("run a bootstrap learn first"))?;
            Ok(attachment(CSV, t.to_csv()))
        }
        "cpt" => {
            let bn = s.fitted()?;
            match &params.node {
                Some(node) => Ok(attachment(CSV, bn.cpt_csv(node)?)),
                None => Ok(attachment(JSON, serde_json::to_vec_pretty(&bn.cpts)?)),
            }
        }
        "policy" => {
            let t = s
                .policy
                .as_ref()
                .ok_or_else(|| ApiError::precondition("compute a policy first"))?;
            Ok(attachment(CSV, t.to_csv()?))
        }
        "model" => Ok(attachment(JSON, s.model_document()?.to_json()?.into_bytes())),
        other => Err(ApiError::not_found(format!("unknown export `{other}`"))),
    })
    .await
}

async fn publish(State(st): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    read(&st, &id, |s| {
        if s.fitted.is_none() {
            return Err(ApiError::precondition("fit before publishing"));
        }
        let title = s.dataset.as_ref().map_or_else(|| s.id.clone(), |d| d.name().to_string());
        let bytes = build_bundle(&title, &s.model_document()?)?;
        Ok((
            [
                (header::CONTENT_TYPE, "application/x-tar"),
                (header::CONTENT_DISPOSITION, "attachment; filename=\"dashboard.tar\""),
            ],
            bytes,
        )
            .into_response())
    })
    .await
}

/// Serves the API until interrupted.
pub async fn serve(addr: &str, data_dir: &std::path::Path) -> std::io::Result<()> {
    let state = Arc::new(AppState {
        sessions: SessionStore::open(data_dir)?,
        jobs: JobStore::default(),
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %data_dir.display(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

