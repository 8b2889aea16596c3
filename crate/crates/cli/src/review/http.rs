use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use refwhy_core::llm::ValidationCase;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use super::state::{ReviewState, ReviewVerdict, VerdictError, VerdictLog};

const INDEX_HTML: &str = include_str!("index.html");

pub struct ReviewApp {
    inner: Mutex<(ReviewState, VerdictLog)>,
    reveal_others: bool,
}

impl ReviewApp {
    pub fn new(state: ReviewState, log: VerdictLog, reveal_others: bool) -> Self {
        Self { inner: Mutex::new((state, log)), reveal_others }
    }

    pub fn state(&self) -> ReviewState {
        self.inner.lock().expect("review state lock").0.clone()
    }
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

#[derive(Deserialize)]
struct CaseQuery {
    reviewer: Option<String>,
    /// Fetch this case instead of the next unreviewed one.
    case: Option<String>,
}

#[derive(Serialize)]
struct CaseView<'a> {
    case: Option<&'a ValidationCase>,
    my_verdict: Option<&'a ReviewVerdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    others: Option<Vec<&'a ReviewVerdict>>,
    remaining: usize,
    total: usize,
}

async fn get_case(State(app): State<Arc<ReviewApp>>, Query(q): Query<CaseQuery>) -> Response {
    let Some(reviewer) = q.reviewer.filter(|r| !r.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "query parameter reviewer is required");
    };
    let guard = app.inner.lock().expect("review state lock");
    let state = &guard.0;
    let case = match &q.case {
        Some(id) => match state.case(id) {
            Some(c) => Some(c),
            None => return error(StatusCode::NOT_FOUND, format!("unknown case {id}")),
        },
        None => state.next_case(&reviewer),
    };
    let others = case.filter(|_| app.reveal_others).map(|c| {
        state.verdicts_for(&c.case_id).into_iter().filter(|v| v.reviewer != reviewer).collect::<Vec<_>>()
    });
    let view = CaseView {
        my_verdict: case.and_then(|c| state.verdict(&c.case_id, &reviewer)),
        case,
        others,
        remaining: state.remaining(&reviewer),
        total: state.cases().len(),
    };
    Json(view).into_response()
}

async fn post_verdict(State(app): State<Arc<ReviewApp>>, body: Bytes) -> Response {
    let mut verdict: ReviewVerdict = match serde_json::from_slice(&body) {
        Ok(v) => v,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed verdict: {e}")),
    };
    verdict.timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0);
    let mut guard = app.inner.lock().expect("review state lock");
    let (state, log) = &mut *guard;
    if let Err(e) = state.check(&verdict) {
        let status = match e {
            VerdictError::UnknownCase(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::BAD_REQUEST,
        };
        return error(status, e);
    }
    if let Err(e) = log.append(&verdict) {
        log::error!("verdict log {}: {e}", log.path().display());
        return error(StatusCode::INTERNAL_SERVER_ERROR, "could not persist the verdict");
    }
    let replaced = state.apply(verdict.clone()).expect("checked above");
    let resolution = state.resolution(&verdict.case_id);
    (StatusCode::CREATED, Json(json!({ "verdict": verdict, "replaced": replaced, "resolution": resolution })))
        .into_response()
}

async fn get_agreement(State(app): State<Arc<ReviewApp>>) -> Response {
    let report = app.inner.lock().expect("review state lock").0.agreement();
    Json(report).into_response()
}

async fn get_progress(State(app): State<Arc<ReviewApp>>) -> Response {
    let progress = app.inner.lock().expect("review state lock").0.progress();
    Json(progress).into_response()
}

async fn index() -> Html<&'static str> {
    Html(INDEX_HTML)
}

/// API routes plus static files: the built UI from `static_dir`, or a
/// bundled single page when none is configured.
pub fn router(app: Arc<ReviewApp>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/cases", get(get_case))
        .route("/api/verdicts", axum::routing::post(post_verdict))
        .route("/api/agreement", get(get_agreement))
        .route("/api/progress", get(get_progress))
        .with_state(app);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(index)).route("/index.html", get(index)),
    }
}
