//! One interface over in-process and networked collection centers.

use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use async_trait::async_trait;
use reqwest::StatusCode;
use thiserror::Error;

use sharevote_core::{
    AcceptOutcome, CenterError, CenterId, CollectionCenter, FieldPrime, LogHeader, PartialSum, Share,
};

use crate::wire::{
    CenterHealth, CenterInit, CenterSummary, Decimal, DeliveryOutcome, DeliveryReceipt, ShareDelivery,
};

#[derive(Debug, Error)]
pub enum CenterClientError {
    /// Transient: retrying may succeed.
    #[error("center {0} unreachable: {1}")]
    Unreachable(CenterId, String),
    /// Permanent: the center refused the request.
    #[error("center {0} rejected the request: {1}")]
    Rejected(CenterId, String),
}

#[async_trait]
pub trait CenterClient: Send + Sync {
    fn id(&self) -> CenterId;

    /// Prepares the center's share log for an election.
    async fn init(&self, header: &LogHeader) -> Result<(), CenterClientError>;

    async fn health(&self) -> Result<(), CenterClientError>;

    async fn deliver(&self, ballot_seq: u64, share: Share) -> Result<AcceptOutcome, CenterClientError>;

    async fn summary(&self) -> Result<PartialSum, CenterClientError>;

    /// Downcast hook for fault injection on in-process centers.
    fn as_local(&self) -> Option<&LocalCenter> {
        None
    }
}

/// A center living in the server process, optionally backed by a log file.
#[derive(Debug)]
pub struct LocalCenter {
    id: CenterId,
    center: Arc<Mutex<CollectionCenter>>,
    offline: AtomicBool,
}

impl LocalCenter {
    pub fn new(center: CollectionCenter) -> Self {
        LocalCenter {
            id: center.id(),
            center: Arc::new(Mutex::new(center)),
            offline: AtomicBool::new(false),
        }
    }

    pub fn open(path: Option<&Path>, header: LogHeader) -> Result<Self, CenterError> {
        let center = match path {
            Some(path) => CollectionCenter::open(path, header)?,
            None => CollectionCenter::in_memory(header),
        };
        Ok(Self::new(center))
    }

    /// Simulates an outage: every call fails as unreachable until cleared.
    pub fn set_offline(&self, offline: bool) {
        self.offline.store(offline, Ordering::SeqCst);
    }

    pub fn last_seq(&self) -> Option<u64> {
        self.center.lock().expect("center lock").state().last_seq()
    }

    /// Drops the in-memory state and replays the share log, as after a crash.
    pub fn restart(&self) -> Result<(), CenterError> {
        let mut guard = self.center.lock().expect("center lock");
        let Some(path) = guard.log_path().map(Path::to_owned) else {
            return Ok(());
        };
        *guard = CollectionCenter::recover(&path)?;
        Ok(())
    }

    fn check_online(&self) -> Result<(), CenterClientError> {
        if self.offline.load(Ordering::SeqCst) {
            Err(CenterClientError::Unreachable(
                self.id,
                "center is offline".into(),
            ))
        } else {
            Ok(())
        }
    }

    async fn with_center<T, F>(&self, f: F) -> Result<T, CenterClientError>
    where
        T: Send + 'static,
        F: FnOnce(&mut CollectionCenter) -> Result<T, CenterError> + Send + 'static,
    {
        self.check_online()?;
        let center = Arc::clone(&self.center);
        let id = self.id;
        // log appends fsync, so keep them off the async workers
        tokio::task::spawn_blocking(move || f(&mut center.lock().expect("center lock")))
            .await
            .map_err(|e| CenterClientError::Unreachable(id, e.to_string()))?
            .map_err(|e| match e {
                CenterError::Io(io) => CenterClientError::Unreachable(id, io.to_string()),
                other => CenterClientError::Rejected(id, other.to_string()),
            })
    }
}

#[async_trait]
impl CenterClient for LocalCenter {
    fn id(&self) -> CenterId {
        self.id
    }

    async fn init(&self, header: &LogHeader) -> Result<(), CenterClientError> {
        let center = self.center.lock().expect("center lock");
        if center.state().header() != header {
            return Err(CenterClientError::Rejected(
                self.id,
                format!("center holds {}", center.state().header()),
            ));
        }
        Ok(())
    }

    async fn health(&self) -> Result<(), CenterClientError> {
        self.check_online()
    }

    async fn deliver(&self, ballot_seq: u64, share: Share) -> Result<AcceptOutcome, CenterClientError> {
        self.with_center(move |c| c.accept_share(ballot_seq, share)).await
    }

    async fn summary(&self) -> Result<PartialSum, CenterClientError> {
        self.check_online()?;
        Ok(self.center.lock().expect("center lock").report_partial_sum())
    }

    fn as_local(&self) -> Option<&LocalCenter> {
        Some(self)
    }
}

/// A center node reached over HTTP (see [`crate::center_node`]).
#[derive(Debug, Clone)]
pub struct RemoteCenter {
    id: CenterId,
    base: String,
    prime: FieldPrime,
    http: reqwest::Client,
}

impl RemoteCenter {
    pub fn new(id: CenterId, base_url: &str, prime: FieldPrime, timeout: Duration) -> Self {
        let http = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client builds");
        RemoteCenter {
            id,
            base: base_url.trim_end_matches('/').to_owned(),
            prime,
            http,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn transport(&self, e: reqwest::Error) -> CenterClientError {
        CenterClientError::Unreachable(self.id, e.to_string())
    }

    async fn check(&self, resp: reqwest::Response) -> Result<reqwest::Response, CenterClientError> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let body = resp.text().await.unwrap_or_default();
        if status.is_server_error() || status == StatusCode::REQUEST_TIMEOUT {
            Err(CenterClientError::Unreachable(
                self.id,
                format!("{status}: {body}"),
            ))
        } else {
            Err(CenterClientError::Rejected(self.id, format!("{status}: {body}")))
        }
    }
}

#[async_trait]
impl CenterClient for RemoteCenter {
    fn id(&self) -> CenterId {
        self.id
    }

    async fn init(&self, header: &LogHeader) -> Result<(), CenterClientError> {
        let body = CenterInit {
            election_id: header.election_id.clone(),
            center_id: header.center.get(),
            prime: Decimal(header.prime.value()),
        };
        let resp = self
            .http
            .post(self.url("/init"))
            .json(&body)
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        self.check(resp).await.map(drop)
    }

    async fn health(&self) -> Result<(), CenterClientError> {
        let resp = self
            .http
            .get(self.url("/health"))
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        let health: CenterHealth = self
            .check(resp)
            .await?
            .json()
            .await
            .map_err(|e| self.transport(e))?;
        match health.center_id {
            Some(j) if j == self.id.get() => Ok(()),
            other => Err(CenterClientError::Rejected(
                self.id,
                format!("node reports center id {other:?}"),
            )),
        }
    }

    async fn deliver(&self, ballot_seq: u64, share: Share) -> Result<AcceptOutcome, CenterClientError> {
        let body = ShareDelivery {
            ballot_seq,
            x: share.x,
            y: Decimal(share.y.value()),
        };
        let resp = self
            .http
            .post(self.url("/shares"))
            .json(&body)
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        let receipt: DeliveryReceipt = self
            .check(resp)
            .await?
            .json()
            .await
            .map_err(|e| self.transport(e))?;
        Ok(match receipt.outcome {
            DeliveryOutcome::Accepted => AcceptOutcome::Accepted,
            DeliveryOutcome::Duplicate => AcceptOutcome::Duplicate,
        })
    }

    async fn summary(&self) -> Result<PartialSum, CenterClientError> {
        let resp = self
            .http
            .get(self.url("/summary"))
            .send()
            .await
            .map_err(|e| self.transport(e))?;
        let s: CenterSummary = self
            .check(resp)
            .await?
            .json()
            .await
            .map_err(|e| self.transport(e))?;
        if s.x != self.id.get() || s.partial_sum.0 >= self.prime.value() {
            return Err(CenterClientError::Rejected(
                self.id,
                format!("malformed summary {s:?}"),
            ));
        }
        Ok(PartialSum {
            x: s.x,
            sum: self.prime.element(s.partial_sum.0),
            count: s.count,
        })
    }
}
