//! HTTP facade over the reconciliation engine.
//!
//! Analysts upload a model and knowledge base, browse findings with their
//! candidate refactoring plans, and apply one plan at a time. Each session
//! keeps an immutable chain of model revisions; an apply names the plan by
//! digest and is rejected with `409 Conflict` when the session has moved on
//! since the plan was issued.

pub mod api;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use api::{router, AppState};
pub use store::{HistoryEntry, Session, SessionStore, StoreError};

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr, data_dir: PathBuf) -> std::io::Result<()> {
    let store = SessionStore::open(data_dir).map_err(std::io::Error::other)?;
    let app = router(Arc::new(store));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}
