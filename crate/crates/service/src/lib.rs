//! HTTP API over fitted lineup models: predictions, optimizer jobs and
//! efficiency reports.
//!
//! All responses carry `schema_version`; the JSON schemas live in the
//! crate's `schemas/` directory. Fit, optimize and evaluate run as jobs
//! polled through `/jobs/{id}`; predict answers synchronously.

pub mod error;
pub mod handlers;
pub mod state;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::routing::{get, post};
use axum::Router;
use tower_http::services::ServeDir;

pub use error::{ApiError, ErrorBody};
pub use state::{AppState, JobKind, JobRecord, JobStatus};

pub const SCHEMA_VERSION: &str = "1";

/// Builds the API router; `static_dir` is served for any other path.
pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(handlers::health))
        .route("/teams", get(handlers::teams))
        .route("/teams/{id}/squad", get(handlers::squad))
        .route("/models", post(handlers::create_model))
        .route("/models/{id}", get(handlers::get_model))
        .route("/models/{id}/predict", post(handlers::predict))
        .route("/models/{id}/optimize", post(handlers::optimize))
        .route("/models/{id}/efficiency", get(handlers::efficiency))
        .route("/evaluations", post(handlers::evaluate))
        .route("/jobs/{id}", get(handlers::job))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
