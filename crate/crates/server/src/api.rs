//! HTTP routes of the election service.

use std::fmt::Display;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use tower_http::cors::CorsLayer;

use sharevote_core::encoding::EncodingError;
use sharevote_core::CommissionerError;

use crate::center_client::CenterClientError;
use crate::service::ElectionService;
use crate::wire::{BallotRequest, CorruptRequest, ErrorBody, OfflineRequest, SetupRequest, TallyRequest};

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub detail: Option<serde_json::Value>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Display) -> Self {
        ApiError {
            status,
            message: message.to_string(),
            detail: None,
        }
    }

    pub fn not_found(m: impl Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, m)
    }

    pub fn conflict(m: impl Display) -> Self {
        Self::new(StatusCode::CONFLICT, m)
    }

    pub fn unprocessable(m: impl Display) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, m)
    }

    pub fn unavailable(m: impl Display) -> Self {
        Self::new(StatusCode::SERVICE_UNAVAILABLE, m)
    }

    pub fn internal(m: impl Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, m)
    }

    pub fn from_center(e: CenterClientError) -> Self {
        match e {
            CenterClientError::Unreachable(..) => Self::unavailable(e),
            CenterClientError::Rejected(..) => Self::new(StatusCode::BAD_GATEWAY, e),
        }
    }

    pub fn from_commissioner(e: CommissionerError) -> Self {
        match &e {
            CommissionerError::CountMismatch(counts) => {
                let detail = counts
                    .iter()
                    .map(|(x, n)| serde_json::json!({"x": x, "count": n}))
                    .collect();
                ApiError {
                    detail: Some(serde_json::Value::Array(detail)),
                    ..Self::conflict(e)
                }
            }
            CommissionerError::Encoding(EncodingError::BlockOverflow {
                candidate,
                count,
                bound,
            }) => ApiError {
                detail: Some(serde_json::json!({
                    "candidate": candidate,
                    "count": count,
                    "bound": bound,
                    "hint": "a center reported a bad partial sum; run GET /verify",
                })),
                ..Self::internal(&e)
            },
            CommissionerError::Encoding(_) | CommissionerError::TallyExceedsBallots { .. } => {
                Self::internal(e)
            }
            CommissionerError::NotEnoughCenters { .. } => Self::unavailable(e),
            _ => Self::unprocessable(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.message,
            detail: self.detail,
        };
        (self.status, Json(body)).into_response()
    }
}

type Shared = Arc<ElectionService>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("invalid JSON body: {e}")))
}

fn parse_optional<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        Ok(T::default())
    } else {
        parse(body)
    }
}

async fn create_election(State(svc): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: SetupRequest = parse(&body)?;
    let descriptor = svc.setup(req.into()).await?;
    Ok((StatusCode::CREATED, Json(descriptor)))
}

async fn get_election(State(svc): State<Shared>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(svc.descriptor().await?))
}

async fn cast_vote(State(svc): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: BallotRequest = parse(&body)?;
    let (ack, pending) = svc.cast(req.candidate_index).await?;
    let status = if pending {
        StatusCode::ACCEPTED
    } else {
        StatusCode::OK
    };
    Ok((status, Json(ack)))
}

async fn center_summary(
    State(svc): State<Shared>,
    Path(j): Path<String>,
) -> Result<impl IntoResponse, ApiError> {
    let j: u64 = j
        .parse()
        .map_err(|_| ApiError::not_found(format!("no collection center {j:?}")))?;
    Ok(Json(svc.center_summary(j).await?))
}

async fn run_tally(State(svc): State<Shared>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: TallyRequest = parse_optional(&body)?;
    Ok(Json(svc.tally(req.centers).await?))
}

async fn run_verify(State(svc): State<Shared>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(svc.verify().await?))
}

async fn corrupt(
    State(svc): State<Shared>,
    Path(j): Path<u64>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let req: CorruptRequest = parse(&body)?;
    svc.corrupt_center(j, req.offset.0).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn offline(
    State(svc): State<Shared>,
    Path(j): Path<u64>,
    body: Bytes,
) -> Result<impl IntoResponse, ApiError> {
    let req: OfflineRequest = parse(&body)?;
    svc.set_offline(j, req.offline).await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn restart(State(svc): State<Shared>, Path(j): Path<u64>) -> Result<impl IntoResponse, ApiError> {
    svc.restart_center(j).await?;
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(service: Arc<ElectionService>) -> Router {
    let mut app = Router::new()
        .route("/election", post(create_election).get(get_election))
        .route("/votes", post(cast_vote))
        .route("/cc/{j}/summary", get(center_summary))
        .route("/tally", post(run_tally))
        .route("/verify", get(run_verify));
    if service.options().test_hooks {
        app = app
            .route("/test/centers/{j}/corrupt", post(corrupt))
            .route("/test/centers/{j}/offline", post(offline))
            .route("/test/centers/{j}/restart", post(restart));
    }
    app.layer(CorsLayer::permissive()).with_state(service)
}
