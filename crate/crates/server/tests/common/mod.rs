#![allow(dead_code)]

use std::sync::Arc;

use reqwest::{Client, Response, StatusCode};
use serde_json::{json, Value};
use tokio::task::JoinHandle;

use sharevote_core::worked_example::{self, COEFFICIENTS};
use sharevote_server::{election_app, CenterNode, ElectionService, ServiceOptions};

pub struct TestServer {
    pub base: String,
    pub service: Arc<ElectionService>,
    pub http: Client,
    task: JoinHandle<()>,
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.task.abort();
    }
}

async fn spawn_router(app: axum::Router) -> (String, JoinHandle<()>) {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let task = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    (format!("http://{addr}"), task)
}

pub async fn spawn(options: ServiceOptions) -> TestServer {
    let (service, app) = election_app(options).await.unwrap();
    let (base, task) = spawn_router(app).await;
    TestServer {
        base,
        service,
        http: Client::new(),
        task,
    }
}

/// A center node on an ephemeral port; returns its base URL.
pub async fn spawn_center_node(log: Option<std::path::PathBuf>) -> (String, JoinHandle<()>) {
    let node = Arc::new(CenterNode::new(log).unwrap());
    spawn_router(sharevote_server::center_node::router(node)).await
}

pub fn hooks() -> ServiceOptions {
    ServiceOptions {
        test_hooks: true,
        retry_backoff: std::time::Duration::from_millis(5),
        ..ServiceOptions::default()
    }
}

pub fn fixed_coefficients() -> ServiceOptions {
    ServiceOptions {
        coefficient_rows: Some(COEFFICIENTS.iter().map(|r| r.to_vec()).collect()),
        ..hooks()
    }
}

pub fn reference_setup() -> Value {
    json!({
        "election_id": worked_example::ELECTION_ID,
        "candidates": [
            {"name": "Candidate1", "symbol": "symbol1"},
            {"name": "Candidate2", "symbol": "symbol2"},
            {"name": "Candidate3", "symbol": "symbol3"},
        ],
        "voter_bound": worked_example::VOTER_BOUND,
        "threshold": worked_example::THRESHOLD,
        "centers": worked_example::CENTERS,
        "prime": worked_example::PRIME.to_string(),
    })
}

pub fn setup_body(c: usize, m: u64, k: usize, n_cc: usize) -> Value {
    let candidates: Vec<Value> = (1..=c).map(|i| json!({"name": format!("c{i}")})).collect();
    json!({"candidates": candidates, "voter_bound": m, "threshold": k, "centers": n_cc})
}

impl TestServer {
    pub fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    pub async fn post(&self, path: &str, body: &Value) -> Response {
        self.http.post(self.url(path)).json(body).send().await.unwrap()
    }

    pub async fn post_empty(&self, path: &str) -> Response {
        self.http.post(self.url(path)).send().await.unwrap()
    }

    pub async fn get(&self, path: &str) -> Response {
        self.http.get(self.url(path)).send().await.unwrap()
    }

    pub async fn setup(&self, body: &Value) -> Value {
        let resp = self.post("/election", body).await;
        assert_eq!(resp.status(), StatusCode::CREATED);
        resp.json().await.unwrap()
    }

    pub async fn vote(&self, candidate: usize) -> Response {
        self.post("/votes", &json!({ "candidate_index": candidate }))
            .await
    }

    pub async fn vote_ok(&self, candidate: usize) -> Value {
        let resp = self.vote(candidate).await;
        assert_eq!(resp.status(), StatusCode::OK);
        resp.json().await.unwrap()
    }

    pub async fn tally(&self, centers: Option<&[u64]>) -> Response {
        match centers {
            Some(c) => self.post("/tally", &json!({ "centers": c })).await,
            None => self.post_empty("/tally").await,
        }
    }

    pub async fn tally_ok(&self, centers: Option<&[u64]>) -> Value {
        let resp = self.tally(centers).await;
        let status = resp.status();
        let body: Value = resp.json().await.unwrap();
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }

    pub async fn summary(&self, j: u64) -> Value {
        let resp = self.get(&format!("/cc/{j}/summary")).await;
        assert_eq!(resp.status(), StatusCode::OK);
        resp.json().await.unwrap()
    }

    pub async fn verify(&self) -> Value {
        let resp = self.get("/verify").await;
        let status = resp.status();
        let body: Value = resp.json().await.unwrap();
        assert_eq!(status, StatusCode::OK, "{body}");
        body
    }
}

pub fn u64s(v: &Value) -> Vec<u64> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| match x {
            Value::String(s) => s.parse().unwrap(),
            other => other.as_u64().unwrap(),
        })
        .collect()
}

pub fn dec(v: &Value) -> u64 {
    v.as_str().unwrap().parse().unwrap()
}
