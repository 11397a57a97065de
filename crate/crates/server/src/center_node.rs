//! A standalone collection center speaking JSON over HTTP.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};

use sharevote_core::{AcceptOutcome, CenterError, CenterId, CollectionCenter, FieldPrime, LogHeader, Share};

use crate::api::ApiError;
use crate::wire::{CenterHealth, CenterInit, CenterSummary, DeliveryOutcome, DeliveryReceipt, ShareDelivery};

/// Node state: nothing until `/init` names the election, unless a log
/// already exists at `log_path` and is recovered at startup.
pub struct CenterNode {
    log_path: Option<PathBuf>,
    center: Mutex<Option<CollectionCenter>>,
}

impl CenterNode {
    pub fn new(log_path: Option<PathBuf>) -> Result<Self, CenterError> {
        let center = match &log_path {
            Some(p) if p.exists() => Some(CollectionCenter::recover(p)?),
            _ => None,
        };
        Ok(CenterNode {
            log_path,
            center: Mutex::new(center),
        })
    }

    pub fn center_id(&self) -> Option<CenterId> {
        self.center
            .lock()
            .expect("center lock")
            .as_ref()
            .map(CollectionCenter::id)
    }

    fn init(&self, req: CenterInit) -> Result<(), ApiError> {
        let id = CenterId::new(req.center_id).map_err(ApiError::unprocessable)?;
        let prime = FieldPrime::new(req.prime.0).map_err(ApiError::unprocessable)?;
        let header = LogHeader::new(&req.election_id, id, prime).map_err(ApiError::unprocessable)?;
        let mut slot = self.center.lock().expect("center lock");
        if let Some(existing) = slot.as_ref() {
            return if existing.state().header() == &header {
                Ok(())
            } else {
                Err(ApiError::conflict(format!(
                    "node already serves {}",
                    existing.state().header()
                )))
            };
        }
        let center = match &self.log_path {
            Some(p) => CollectionCenter::open(p, header).map_err(|e| match e {
                CenterError::HeaderMismatch { .. } => ApiError::conflict(e),
                other => ApiError::internal(other),
            })?,
            None => CollectionCenter::in_memory(header),
        };
        *slot = Some(center);
        Ok(())
    }

    fn accept(&self, req: ShareDelivery) -> Result<DeliveryReceipt, ApiError> {
        let mut slot = self.center.lock().expect("center lock");
        let center = slot
            .as_mut()
            .ok_or_else(|| ApiError::conflict("node is not initialized"))?;
        let prime = center.state().header().prime;
        if req.y.0 >= prime.value() {
            return Err(ApiError::unprocessable(format!(
                "share value {} is not below p",
                req.y
            )));
        }
        let share = Share::new(req.x, prime.element(req.y.0));
        let outcome = center.accept_share(req.ballot_seq, share).map_err(|e| match e {
            CenterError::Io(_) => ApiError::internal(e),
            CenterError::ConflictingReplay { .. } => ApiError::conflict(e),
            other => ApiError::unprocessable(other),
        })?;
        Ok(DeliveryReceipt {
            outcome: match outcome {
                AcceptOutcome::Accepted => DeliveryOutcome::Accepted,
                AcceptOutcome::Duplicate => DeliveryOutcome::Duplicate,
            },
            count: center.state().ballot_count(),
        })
    }

    fn summary(&self) -> Result<CenterSummary, ApiError> {
        let slot = self.center.lock().expect("center lock");
        let center = slot
            .as_ref()
            .ok_or_else(|| ApiError::conflict("node is not initialized"))?;
        Ok(center.report_partial_sum().into())
    }
}

type Node = Arc<CenterNode>;

fn parse<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::unprocessable(format!("invalid JSON body: {e}")))
}

async fn init(State(node): State<Node>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    node.init(parse(&body)?)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn health(State(node): State<Node>) -> Json<CenterHealth> {
    Json(CenterHealth {
        center_id: node.center_id().map(CenterId::get),
    })
}

async fn shares(State(node): State<Node>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: ShareDelivery = parse(&body)?;
    // the append fsyncs before acknowledging
    let receipt = tokio::task::spawn_blocking(move || node.accept(req))
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(receipt))
}

async fn summary(State(node): State<Node>) -> Result<impl IntoResponse, ApiError> {
    Ok(Json(node.summary()?))
}

pub fn router(node: Arc<CenterNode>) -> Router {
    Router::new()
        .route("/init", post(init))
        .route("/health", get(health))
        .route("/shares", post(shares))
        .route("/summary", get(summary))
        .with_state(node)
}
