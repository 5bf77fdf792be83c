//! JSON-over-HTTP API.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::NaiveDate;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::service::OracleService;

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for OracleError {
    fn into_response(self) -> Response {
        let status = match self {
            OracleError::Validation(_) => StatusCode::BAD_REQUEST,
            OracleError::Unauthorized => StatusCode::UNAUTHORIZED,
            OracleError::Conflict(_) => StatusCode::CONFLICT,
            OracleError::NotFound(_) => StatusCode::NOT_FOUND,
            OracleError::Storage(_) | OracleError::Corrupt { .. } => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let body = ErrorBody {
            code: self.code().to_string(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, OracleError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| OracleError::Validation(format!("invalid request body: {e}")))
}

fn bearer(headers: &HeaderMap) -> ApiResult<&str> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or(OracleError::Unauthorized)
}

fn parse_date(key: &str, value: &str) -> ApiResult<NaiveDate> {
    value
        .parse()
        .map_err(|_| OracleError::Validation(format!("{key}: expected YYYY-MM-DD, got {value:?}")))
}

fn query_date(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<NaiveDate>> {
    q.get(key).map(|v| parse_date(key, v)).transpose()
}

fn query_num<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str) -> ApiResult<Option<T>> {
    q.get(key)
        .map(|v| {
            v.parse()
                .map_err(|_| OracleError::Validation(format!("{key}: cannot parse {v:?}")))
        })
        .transpose()
}

#[derive(Deserialize)]
struct NewUser {
    handle: String,
}

async fn create_user(State(svc): State<Arc<OracleService>>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let req: NewUser = parse_body(&body)?;
    let reg = svc.register_user(&req.handle)?;
    Ok((StatusCode::CREATED, Json(reg)))
}

#[derive(Deserialize)]
struct NewPrediction {
    symbol: String,
    target_date: NaiveDate,
    #[serde(with = "crate::price")]
    predicted_price: f64,
}

async fn create_prediction(
    State(svc): State<Arc<OracleService>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let user_id = svc.authenticate(bearer(&headers)?)?;
    let req: NewPrediction = parse_body(&body)?;
    let record = svc.submit_prediction(&user_id, &req.symbol, req.target_date, req.predicted_price)?;
    Ok((StatusCode::CREATED, Json(record)))
}

#[derive(Deserialize)]
struct NewResolution {
    symbol: String,
    date: NaiveDate,
    #[serde(with = "crate::price")]
    actual_price: f64,
}

#[derive(Serialize)]
struct Resolved {
    resolved_count: usize,
}

async fn create_resolution(
    State(svc): State<Arc<OracleService>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    svc.check_admin(bearer(&headers)?)?;
    let req: NewResolution = parse_body(&body)?;
    let resolved_count = svc.resolve(&req.symbol, req.date, req.actual_price)?;
    Ok(Json(Resolved { resolved_count }))
}

async fn leaderboard(
    State(svc): State<Arc<OracleService>>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<impl IntoResponse> {
    let board = svc.leaderboard(
        query_date(&q, "from")?,
        query_date(&q, "to")?,
        query_num(&q, "min_resolved")?,
    )?;
    Ok(Json(board))
}

async fn superforecasters(State(svc): State<Arc<OracleService>>) -> impl IntoResponse {
    Json(svc.superforecasters())
}

async fn forecast(
    State(svc): State<Arc<OracleService>>,
    Path(symbol): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<impl IntoResponse> {
    let target_date = query_date(&q, "target_date")?
        .ok_or_else(|| OracleError::Validation("target_date is required".into()))?;
    let weight: Option<f64> = query_num(&q, "weight")?;
    Ok(Json(svc.forecast(&symbol, target_date, weight)?))
}

pub fn router(service: Arc<OracleService>) -> Router {
    Router::new()
        .route("/users", post(create_user))
        .route("/predictions", post(create_prediction))
        .route("/resolutions", post(create_resolution))
        .route("/leaderboard", get(leaderboard))
        .route("/superforecasters", get(superforecasters))
        .route("/forecast/{symbol}", get(forecast))
        .with_state(service)
}
