//! HTTP front door for elicitation sessions.
//!
//! | Method | Path | |
//! |---|---|---|
//! | POST | `/sessions` | create a session from a scenario |
//! | GET | `/sessions/{id}/question` | the next question, or why the session stopped |
//! | POST | `/sessions/{id}/answer` | answer the offered question |
//! | GET | `/sessions/{id}/recommendation` | current ranking, χ and transcript |
//! | GET | `/healthz` | liveness |

mod error;
mod store;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use uuid::Uuid;

use decisive_core::scoring::ScenarioFile;
use decisive_core::{ElicitationConfig, Exchange, Question, Response, Scenario, SessionStatus, StopReason};

pub use error::ApiError;
pub use store::{SessionRecord, SessionStore, SharedRecord};

/// Environment variable holding the bind address.
pub const ADDR_ENV: &str = "DECISIVE_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:8080";

pub fn default_idle_timeout() -> chrono::Duration {
    chrono::Duration::hours(24)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    scenario: Value,
    #[serde(default)]
    config: Option<Value>,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: Uuid,
    pub seed: u64,
    pub status: SessionStatus,
    pub confidence: f64,
    pub question_budget: usize,
    pub option_labels: Vec<String>,
    pub factor_labels: Vec<String>,
    pub config: ElicitationConfig,
    pub created_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfferedQuestion {
    pub factor_a: usize,
    pub factor_b: usize,
    pub label_a: String,
    pub label_b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionResponse {
    pub status: SessionStatus,
    pub question: Option<OfferedQuestion>,
    pub confidence: f64,
    pub questions_asked: usize,
    pub question_budget: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerBody {
    question: Question,
    response: Response,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub status: SessionStatus,
    pub confidence: f64,
    pub questions_asked: usize,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedOption {
    pub option: usize,
    pub label: String,
    pub expected_utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub status: SessionStatus,
    pub stop_reason: Option<StopReason>,
    pub ranking: Vec<RankedOption>,
    pub decision_distribution: Vec<f64>,
    pub entropy: f64,
    pub confidence: f64,
    pub questions_asked: usize,
    pub transcript: Vec<Exchange>,
    pub updated_at: DateTime<Utc>,
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_json<T: serde::de::DeserializeOwned>(body: &[u8], code: &'static str) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(code, e.to_string()))
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<(StatusCode, Json<CreateResponse>), ApiError> {
    let body: CreateBody = parse_json(&body, "invalid_json")?;
    let file: ScenarioFile = serde_json::from_value(body.scenario)
        .map_err(|e| ApiError::bad_request("invalid_scenario", e.to_string()))?;
    let scenario = Scenario::try_from(file)?;
    let config: ElicitationConfig = match body.config {
        Some(v) => serde_json::from_value(v).map_err(|e| ApiError::bad_request("invalid_config", e.to_string()))?,
        None => ElicitationConfig::default(),
    };
    config
        .validate()
        .map_err(|e| ApiError::bad_request("invalid_config", e.to_string()))?;
    let seed = body.seed.unwrap_or_else(rand::random);

    let shared = store.create(scenario, config, seed, Utc::now())?;
    let record = shared.lock().unwrap();
    let matrix = record.state.matrix();
    Ok((
        StatusCode::CREATED,
        Json(CreateResponse {
            id: record.id,
            seed: record.seed,
            status: record.state.status(),
            confidence: record.state.confidence(),
            question_budget: record.state.question_budget(),
            option_labels: matrix.option_labels().to_vec(),
            factor_labels: matrix.factor_labels().to_vec(),
            config: record.state.config().clone(),
            created_at: record.created_at,
        }),
    ))
}

fn offered(record: &SessionRecord) -> Option<OfferedQuestion> {
    if !record.state.is_active() {
        return None;
    }
    let labels = record.state.matrix().factor_labels();
    record.state.select_question().map(|q| OfferedQuestion {
        factor_a: q.factor_a(),
        factor_b: q.factor_b(),
        label_a: labels[q.factor_a()].clone(),
        label_b: labels[q.factor_b()].clone(),
    })
}

async fn next_question(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<QuestionResponse> {
    let shared = store.get(&id)?;
    let record = shared.lock().unwrap();
    Ok(Json(QuestionResponse {
        status: record.state.status(),
        question: offered(&record),
        confidence: record.state.confidence(),
        questions_asked: record.state.questions_asked(),
        question_budget: record.state.question_budget(),
    }))
}

async fn submit_answer(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<AnswerResponse> {
    let shared = store.get(&id)?;
    let body: AnswerBody = parse_json(&body, "invalid_answer")?;
    let mut record = shared.lock().unwrap();
    if let SessionStatus::Stopped(reason) = record.state.status() {
        return Err(ApiError::conflict("session_stopped", format!("session stopped: {reason}"))
            .with_detail(serde_json::json!({ "reason": reason })));
    }
    let current = record.state.select_question();
    if current != Some(body.question) {
        return Err(ApiError::conflict(
            "stale_question",
            format!("answered {} but the offered question is different", body.question),
        )
        .with_detail(serde_json::json!({ "offered": current, "answered": body.question })));
    }
    store.answer(&mut record, body.question, body.response, Utc::now())?;
    Ok(Json(AnswerResponse {
        status: record.state.status(),
        confidence: record.state.confidence(),
        questions_asked: record.state.questions_asked(),
        updated_at: record.updated_at,
    }))
}

async fn recommendation(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<RecommendationResponse> {
    let shared = store.get(&id)?;
    let record = shared.lock().unwrap();
    let result = record.state.result();
    let labels = record.state.matrix().option_labels();
    Ok(Json(RecommendationResponse {
        status: record.state.status(),
        stop_reason: result.stop_reason,
        ranking: result
            .ranking
            .iter()
            .map(|&o| RankedOption {
                option: o,
                label: labels[o].clone(),
                expected_utility: result.expected_utilities[o],
            })
            .collect(),
        confidence: result.final_distribution.confidence(),
        entropy: result.final_distribution.entropy(),
        decision_distribution: result.final_distribution.probs().to_vec(),
        questions_asked: result.question_count,
        transcript: result.transcript,
        updated_at: record.updated_at,
    }))
}

async fn healthz(State(store): State<Arc<SessionStore>>) -> Json<Value> {
    Json(serde_json::json!({ "status": "ok", "sessions": store.len() }))
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/question", get(next_question))
        .route("/sessions/{id}/answer", post(submit_answer))
        .route("/sessions/{id}/recommendation", get(recommendation))
        .route("/healthz", get(healthz))
        .fallback(fallback)
        .with_state(store)
}

/// Serves until Ctrl-C, sweeping idle sessions once a minute.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let sweeper = store.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.purge_idle(Utc::now());
        }
    });
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
