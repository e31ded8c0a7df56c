use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use verbum_core::argument::{pool, pooling_admissible, KnowledgeBase, Outcome, DEFAULT_POOLING_THETA};
use verbum_core::fuzzy::UnitFuzzyNumber;
use verbum_core::lexicon::Lexicon;

use crate::error::ServiceError;
use crate::session::{Answer, CreateSession, Question, Session};
use crate::store::Store;

type AppState = Arc<Store>;
type ApiResult<T> = Result<Json<T>, ServiceError>;

pub fn router(store: Arc<Store>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(get_session))
        .route("/sessions/:id/question", get(get_question))
        .route("/sessions/:id/answers", post(post_answer))
        .route("/sessions/:id/evaluate", post(post_evaluate))
        .route("/lexicons/:owner", get(get_lexicon).put(put_lexicon))
        .route("/pooling/check", post(pooling_check))
        .with_state(store)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::Validation(vec![e.body_text()]))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session: Session,
    pub question: Option<Question>,
}

impl From<Session> for SessionView {
    fn from(session: Session) -> Self {
        let question = session.next_question();
        Self { session, question }
    }
}

async fn create_session(
    State(store): State<AppState>,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ServiceError> {
    let s = store.create(body(payload)?)?;
    Ok((StatusCode::CREATED, Json(s.into())))
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    Ok(Json(store.get(&id)?.into()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionView {
    pub version: u64,
    pub question: Option<Question>,
}

async fn get_question(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<QuestionView> {
    let s = store.get(&id)?;
    Ok(Json(QuestionView {
        version: s.version,
        question: s.next_question(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub question_id: String,
    pub version: u64,
    pub payload: Answer,
}

async fn post_answer(
    State(store): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<AnswerRequest>, JsonRejection>,
) -> ApiResult<SessionView> {
    let req = body(payload)?;
    let ((), s) = store.update(&id, |s| s.answer(req.version, &req.question_id, req.payload))?;
    Ok(Json(s.into()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvaluateView {
    pub version: u64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

async fn post_evaluate(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<EvaluateView> {
    let (outcome, s) = store.update(&id, Session::evaluate)?;
    Ok(Json(EvaluateView {
        version: s.version,
        outcome,
    }))
}

async fn get_lexicon(State(store): State<AppState>, Path(owner): Path<String>) -> ApiResult<Lexicon> {
    Ok(Json(store.get_lexicon(&owner)?))
}

async fn put_lexicon(
    State(store): State<AppState>,
    Path(owner): Path<String>,
    payload: Result<Json<Lexicon>, JsonRejection>,
) -> ApiResult<Lexicon> {
    Ok(Json(store.put_lexicon(&owner, body(payload)?)?))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PoolingRequest {
    pub first: KnowledgeBase,
    pub second: KnowledgeBase,
    #[serde(default)]
    pub theta: Option<f64>,
    /// Evaluations to pool when the bases are comparable.
    #[serde(default)]
    pub evaluations: Vec<UnitFuzzyNumber>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PoolingView {
    pub overlap: f64,
    pub admissible: bool,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pooled: Option<UnitFuzzyNumber>,
}

pub fn check_pooling(req: &PoolingRequest) -> Result<PoolingView, ServiceError> {
    let theta = req.theta.unwrap_or(DEFAULT_POOLING_THETA);
    let check = pooling_admissible(&req.first, &req.second, theta)?;
    let pooled = if check.admissible && !req.evaluations.is_empty() {
        Some(pool(&req.evaluations)?)
    } else {
        None
    };
    Ok(PoolingView {
        overlap: check.overlap,
        admissible: check.admissible,
        theta,
        pooled,
    })
}

async fn pooling_check(payload: Result<Json<PoolingRequest>, JsonRejection>) -> ApiResult<PoolingView> {
    Ok(Json(check_pooling(&body(payload)?)?))
}
