//! HTTP service for secret-shared elections.
//!
//! The election service takes ballots, splits them into shares and hands
//! share `j` to collection center `j`, either in-process or on a separate
//! center node. Tally and verification read only the centers' partial sums.

pub mod api;
pub mod center_client;
pub mod center_node;
pub mod service;
pub mod wire;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::Router;
use tokio::net::TcpListener;

pub use api::{router, ApiError};
pub use center_client::{CenterClient, CenterClientError, LocalCenter, RemoteCenter};
pub use center_node::CenterNode;
pub use service::{ElectionService, ServiceOptions};

/// Environment variable holding the default bind address.
pub const BIND_ENV: &str = "SHAREVOTE_BIND";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Serves `app` on `listener` until ctrl-c.
pub async fn serve(listener: TcpListener, app: Router) -> std::io::Result<()> {
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `addr`, returning the listener and its resolved local address.
pub async fn bind(addr: &str) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

/// Builds the election service router with `options`.
pub async fn election_app(options: ServiceOptions) -> Result<(Arc<ElectionService>, Router), ApiError> {
    let service = Arc::new(ElectionService::open(options).await?);
    Ok((Arc::clone(&service), router(service)))
}
