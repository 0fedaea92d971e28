//! Role-based HTTP service for the credential registry. A [`Node`] owns one
//! data directory and exposes every workflow as a method; [`http::router`]
//! maps them onto routes with bearer-token sessions.

pub mod config;
pub mod demo;
pub mod driver;
mod error;
pub mod http;
pub mod node;
mod sessions;

pub use config::{ChainParams, ConfigError, ServiceConfig};
pub use error::ServiceError;
pub use node::{InitParams, Node, NodeOptions, VerificationResult};
pub use sessions::SessionPrincipal;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

/// Serves `node` until the process receives Ctrl-C. A zero interval disables
/// the mining driver.
pub async fn serve(node: Arc<Node>, addr: SocketAddr, mining_interval: Duration) -> std::io::Result<()> {
    let driver = (!mining_interval.is_zero()).then(|| driver::spawn_mining_driver(node.clone(), mining_interval));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    let result = axum::serve(listener, http::router(node))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await;
    if let Some(driver) = driver {
        driver.abort();
    }
    result
}
