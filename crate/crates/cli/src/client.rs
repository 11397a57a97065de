//! Thin HTTP client for the election service.

use reqwest::{Client, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use sharevote_server::wire::{
    BallotAck, ElectionDescriptor, ErrorBody, SetupRequest, TallyResponse, VerifyResponse,
};

#[derive(Debug)]
pub enum CallError {
    /// The service answered with an error status.
    Status {
        status: StatusCode,
        error: String,
    },
    Transport(String),
}

impl std::fmt::Display for CallError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CallError::Status { status, error } => write!(f, "{status}: {error}"),
            CallError::Transport(e) => write!(f, "cannot reach the election service: {e}"),
        }
    }
}

impl std::error::Error for CallError {}

impl CallError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            CallError::Status { status, .. } => Some(*status),
            CallError::Transport(_) => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServiceClient {
    base: String,
    http: Client,
}

impl ServiceClient {
    pub fn new(base: &str) -> Self {
        ServiceClient {
            base: base.trim_end_matches('/').to_owned(),
            http: Client::new(),
        }
    }

    async fn send<T: DeserializeOwned>(
        &self,
        req: reqwest::RequestBuilder,
    ) -> Result<(StatusCode, T), CallError> {
        let resp = req
            .send()
            .await
            .map_err(|e| CallError::Transport(e.to_string()))?;
        let status = resp.status();
        let bytes = resp
            .bytes()
            .await
            .map_err(|e| CallError::Transport(e.to_string()))?;
        if !status.is_success() {
            let error = serde_json::from_slice::<ErrorBody>(&bytes)
                .map(|b| b.error)
                .unwrap_or_else(|_| String::from_utf8_lossy(&bytes).into_owned());
            return Err(CallError::Status { status, error });
        }
        let body = if bytes.is_empty() {
            b"null".as_slice()
        } else {
            &bytes
        };
        serde_json::from_slice(body)
            .map(|v| (status, v))
            .map_err(|e| CallError::Transport(format!("unexpected response: {e}")))
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, CallError> {
        Ok(self.send(self.http.post(self.url(path)).json(body)).await?.1)
    }

    pub async fn setup(&self, req: &SetupRequest) -> Result<ElectionDescriptor, CallError> {
        self.post("/election", req).await
    }

    pub async fn election(&self) -> Result<ElectionDescriptor, CallError> {
        Ok(self.send(self.http.get(self.url("/election"))).await?.1)
    }

    pub async fn vote(&self, candidate_index: usize) -> Result<BallotAck, CallError> {
        self.post("/votes", &json!({ "candidate_index": candidate_index }))
            .await
    }

    pub async fn tally(&self, centers: Option<&[u64]>) -> Result<TallyResponse, CallError> {
        self.post("/tally", &json!({ "centers": centers })).await
    }

    pub async fn verify(&self) -> Result<VerifyResponse, CallError> {
        Ok(self.send(self.http.get(self.url("/verify"))).await?.1)
    }

    pub async fn test_hook(&self, center: u64, action: &str, body: Option<Value>) -> Result<(), CallError> {
        let path = format!("/test/centers/{center}/{action}");
        let mut req = self.http.post(self.url(&path));
        if let Some(body) = body {
            req = req.json(&body);
        }
        self.send::<Value>(req).await.map(drop)
    }
}
