//! JSON API over a single expansion session.
//!
//! Reads clone the current session under a short read lock. Mutations are
//! serialized by one async mutex; an iteration is computed on a snapshot
//! off the async threads, so status reads stay responsive meanwhile.

use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State as AxState;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex};

use crate::corpus::LoadedIndex;
use crate::error::{Error, Result};
use crate::lm::RankingParams;
use crate::session::{
    CandidateTerm, Decisions, ExpansionSession, IterationRecord, RankedDocument, SessionStatus,
};

pub const API_VERSION: u32 = 1;

pub struct SessionServer {
    index: Arc<LoadedIndex>,
    session: RwLock<ExpansionSession>,
    mutate: Mutex<()>,
    save_to: Option<PathBuf>,
    converged: watch::Sender<bool>,
}

impl SessionServer {
    pub fn new(index: Arc<LoadedIndex>, session: ExpansionSession, save_to: Option<PathBuf>) -> Result<Arc<Self>> {
        session.validate(&index)?;
        let (converged, _) = watch::channel(session.is_converged());
        Ok(Arc::new(SessionServer {
            index,
            session: RwLock::new(session),
            mutate: Mutex::new(()),
            save_to,
            converged,
        }))
    }

    pub fn snapshot(&self) -> ExpansionSession {
        self.session.read().expect("session lock").clone()
    }

    pub fn into_session(self: Arc<Self>) -> ExpansionSession {
        self.snapshot()
    }

    /// Resolves once the session has converged.
    pub fn converged(&self) -> impl Future<Output = ()> + Send + 'static {
        let mut rx = self.converged.subscribe();
        async move {
            let _ = rx.wait_for(|c| *c).await;
        }
    }

    fn after_mutation(&self, s: &ExpansionSession) -> Result<()> {
        if let Some(path) = &self.save_to {
            s.save(path)?;
        }
        self.converged.send_replace(s.is_converged());
        Ok(())
    }

    async fn iterate(&self) -> Result<IterationRecord> {
        let _guard = self.mutate.lock().await;
        let snapshot = self.snapshot();
        let index = Arc::clone(&self.index);
        let record = tokio::task::spawn_blocking(move || snapshot.compute_iteration(&index))
            .await
            .map_err(|e| Error::Session(format!("iteration task failed: {e}")))??;
        let mut s = self.session.write().expect("session lock");
        let rec = s.apply_iteration(record)?.clone();
        self.after_mutation(&s)?;
        Ok(rec)
    }

    async fn decide(&self, req: DecisionRequest) -> Result<SessionView> {
        let _guard = self.mutate.lock().await;
        let mut s = self.session.write().expect("session lock");
        s.submit_decisions(&req.decisions, req.decided_by.as_deref())?;
        self.after_mutation(&s)?;
        Ok(SessionView::of(&s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub api_version: u32,
    pub session_id: String,
    pub status: SessionStatus,
    pub iteration: u32,
    pub initial_query: Vec<String>,
    pub query: Vec<String>,
    pub relevant: Vec<String>,
    pub params: RankingParams,
}

impl SessionView {
    pub fn of(s: &ExpansionSession) -> Self {
        SessionView {
            api_version: API_VERSION,
            session_id: s.session_id.clone(),
            status: s.status,
            iteration: s.iteration(),
            initial_query: s.initial_query.clone(),
            query: s.query.clone(),
            relevant: s.relevant.clone(),
            params: s.params,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingView {
    pub iteration: u32,
    pub zero_signal: bool,
    pub documents: Vec<RankedDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatesView {
    pub iteration: u32,
    pub status: SessionStatus,
    pub candidates: Vec<CandidateTerm>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryView {
    pub history: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRequest {
    pub decisions: Decisions,
    #[serde(default)]
    pub decided_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let code = match &self.0 {
            Error::WrongStatus { .. } => StatusCode::CONFLICT,
            Error::InvalidDecisions(_) | Error::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (code, Json(ErrorBody { error: self.0.to_string() })).into_response()
    }
}

type Shared = AxState<Arc<SessionServer>>;

async fn get_session(AxState(srv): Shared) -> Json<SessionView> {
    Json(SessionView::of(&srv.session.read().expect("session lock")))
}

async fn get_ranking(AxState(srv): Shared) -> Json<RankingView> {
    let s = srv.session.read().expect("session lock");
    Json(match s.latest() {
        Some(r) => RankingView {
            iteration: r.iteration,
            zero_signal: r.zero_signal,
            documents: r.ranking.clone(),
        },
        None => RankingView {
            iteration: 0,
            zero_signal: false,
            documents: Vec::new(),
        },
    })
}

async fn get_candidates(AxState(srv): Shared) -> Json<CandidatesView> {
    let s = srv.session.read().expect("session lock");
    Json(CandidatesView {
        iteration: s.iteration(),
        status: s.status,
        candidates: s.latest().map(|r| r.candidates.clone()).unwrap_or_default(),
    })
}

async fn get_history(AxState(srv): Shared) -> Json<HistoryView> {
    Json(HistoryView {
        history: srv.session.read().expect("session lock").history.clone(),
    })
}

async fn get_export(AxState(srv): Shared) -> Json<ExpansionSession> {
    Json(srv.snapshot())
}

async fn post_decisions(AxState(srv): Shared, body: Bytes) -> std::result::Result<Json<SessionView>, ApiError> {
    let req: DecisionRequest = serde_json::from_slice(&body).map_err(Error::from)?;
    Ok(Json(srv.decide(req).await?))
}

async fn post_iterate(AxState(srv): Shared) -> std::result::Result<Json<IterationRecord>, ApiError> {
    Ok(Json(srv.iterate().await?))
}

/// Routes under `/api`, plus static files from `static_dir` at `/`.
pub fn router(server: Arc<SessionServer>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/session", get(get_session))
        .route("/api/session/ranking", get(get_ranking))
        .route("/api/session/candidates", get(get_candidates))
        .route("/api/session/history", get(get_history))
        .route("/api/session/export", get(get_export))
        .route("/api/session/decisions", post(post_decisions))
        .route("/api/session/iterate", post(post_iterate))
        .with_state(server);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until `shutdown` resolves, or until `linger` after convergence
/// when `linger` is set.
pub async fn serve(
    listener: tokio::net::TcpListener,
    server: Arc<SessionServer>,
    static_dir: Option<PathBuf>,
    linger: Option<Duration>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    let converged = server.converged();
    let stop = async move {
        match linger {
            Some(d) => {
                tokio::select! {
                    _ = shutdown => {}
                    _ = async { converged.await; tokio::time::sleep(d).await } => {}
                }
            }
            None => shutdown.await,
        }
    };
    axum::serve(listener, router(server, static_dir))
        .with_graceful_shutdown(stop)
        .await
        .map_err(|e| Error::Session(format!("server: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{PartialIndex, Thresholds};
    use axum::body::Body;
    use axum::http::Request;
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    fn server() -> Arc<SessionServer> {
        let mut p = PartialIndex::new();
        for d in ["t1", "t2"] {
            p.add_term_count(d, "seed", 20);
            p.add_term_count(d, "slang", 30);
            p.add_term_count(d, "common", 50);
        }
        for i in 0..4 {
            p.add_term_count(&format!("bg{i}"), "common", 100);
            p.add_term_count(&format!("bg{i}"), "other", 50);
        }
        let idx = Arc::new(LoadedIndex::new(p.finish(Thresholds {
            min_doc_entries: 0,
            min_term_count: 0,
        })));
        let params = RankingParams {
            alpha: 10.0,
            top_docs: 2,
            top_terms: 2,
        };
        let s = ExpansionSession::create(&idx, &["seed"], params).unwrap();
        SessionServer::new(idx, s, None).unwrap()
    }

    async fn call(srv: &Arc<SessionServer>, method: &str, uri: &str, body: &str) -> (StatusCode, serde_json::Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = router(Arc::clone(srv), None).oneshot(req).await.unwrap();
        let code = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (code, serde_json::from_slice(&bytes).unwrap())
    }

    #[tokio::test]
    async fn status_guards() {
        let srv = server();
        let (code, body) = call(&srv, "POST", "/api/session/decisions", r#"{"decisions":{}}"#).await;
        assert_eq!(code, StatusCode::CONFLICT);
        assert!(body["error"].as_str().unwrap().contains("awaiting_iteration"));

        let (code, _) = call(&srv, "POST", "/api/session/iterate", "").await;
        assert_eq!(code, StatusCode::OK);
        let (code, _) = call(&srv, "POST", "/api/session/iterate", "").await;
        assert_eq!(code, StatusCode::CONFLICT);
    }

    #[tokio::test]
    async fn incomplete_or_malformed_decisions_are_rejected() {
        let srv = server();
        call(&srv, "POST", "/api/session/iterate", "").await;
        let (code, _) = call(&srv, "POST", "/api/session/decisions", r#"{"decisions":{}}"#).await;
        assert_eq!(code, StatusCode::BAD_REQUEST);
        let (code, _) = call(&srv, "POST", "/api/session/decisions", r#"{"decisions":{"slang":"maybe"}}"#).await;
        assert_eq!(code, StatusCode::BAD_REQUEST);
        let (code, _) = call(&srv, "POST", "/api/session/decisions", "not json").await;
        assert_eq!(code, StatusCode::BAD_REQUEST);
        assert_eq!(srv.snapshot().status, SessionStatus::AwaitingDecisions);
    }

    #[tokio::test]
    async fn full_loop() {
        let srv = server();
        let (_, v) = call(&srv, "GET", "/api/session", "").await;
        assert_eq!(v["status"], "awaiting_iteration");
        assert_eq!(v["iteration"], 0);
        let (_, r) = call(&srv, "GET", "/api/session/ranking", "").await;
        assert_eq!(r["documents"].as_array().unwrap().len(), 0);

        call(&srv, "POST", "/api/session/iterate", "").await;
        let (_, r) = call(&srv, "GET", "/api/session/ranking", "").await;
        let docs: Vec<_> = r["documents"].as_array().unwrap().iter().map(|d| d["document"].clone()).collect();
        assert_eq!(docs, ["t1", "t2"]);
        let (_, c) = call(&srv, "GET", "/api/session/candidates", "").await;
        // top 2 terms are slang and seed; seed is already in the query
        assert_eq!(c["candidates"].as_array().unwrap().len(), 1);

        let (code, v) = call(
            &srv,
            "POST",
            "/api/session/decisions",
            r#"{"decisions":{"slang":"accept"},"decided_by":"http"}"#,
        )
        .await;
        assert_eq!(code, StatusCode::OK);
        assert_eq!(v["query"], serde_json::json!(["seed", "slang"]));

        call(&srv, "POST", "/api/session/iterate", "").await;
        let (_, c) = call(&srv, "GET", "/api/session/candidates", "").await;
        assert!(c["candidates"].as_array().unwrap().is_empty() || c["status"] == "awaiting_decisions");
        if c["status"] == "awaiting_decisions" {
            let all: serde_json::Map<_, _> = c["candidates"]
                .as_array()
                .unwrap()
                .iter()
                .map(|t| (t["term"].as_str().unwrap().to_string(), "reject".into()))
                .collect();
            let body = serde_json::json!({ "decisions": all }).to_string();
            let (code, _) = call(&srv, "POST", "/api/session/decisions", &body).await;
            assert_eq!(code, StatusCode::OK);
        }
        let (_, v) = call(&srv, "GET", "/api/session", "").await;
        assert_eq!(v["status"], "converged");
        let (_, h) = call(&srv, "GET", "/api/session/history", "").await;
        assert_eq!(h["history"].as_array().unwrap().len(), 2);
        let (_, e) = call(&srv, "GET", "/api/session/export", "").await;
        assert_eq!(e["session_id"], srv.snapshot().session_id);
        tokio::time::timeout(Duration::from_secs(1), srv.converged()).await.unwrap();
    }
}
