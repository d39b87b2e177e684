//! HTTP JSON API over a persisted model store.
//!
//! Readers clone an `Arc` of the current [`Loaded`] view and never wait on
//! writers, except for the pointer swap itself. Title edits and reloads go
//! through a single writer gate and publish a whole new view.

mod auth;
mod routes;

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;
use tokio::net::TcpListener;

use crate::error::{Error, Result};
use crate::store::{ModelStore, Snapshot};

pub use auth::{Auth, Credentials, Session, DEFAULT_SESSION_TTL};
pub use routes::router;

/// One consistent view served to readers.
#[derive(Debug)]
pub struct Loaded {
    pub store: ModelStore,
    pub snapshot: Arc<Snapshot>,
    pub titles: Arc<Vec<String>>,
}

#[derive(Debug)]
pub struct AppState {
    current: RwLock<Arc<Loaded>>,
    writer: tokio::sync::Mutex<()>,
    pub auth: Auth,
}

impl AppState {
    pub fn new(store: ModelStore, snapshot: Snapshot, auth: Auth) -> Self {
        let titles = Arc::new(snapshot.model.titles().to_vec());
        AppState {
            current: RwLock::new(Arc::new(Loaded {
                store,
                snapshot: Arc::new(snapshot),
                titles,
            })),
            writer: tokio::sync::Mutex::new(()),
            auth,
        }
    }

    /// Loads the store eagerly; a corrupt store fails here, naming the file.
    pub fn open(dir: &Path, credentials: Credentials, ttl: Duration) -> Result<Self> {
        let store = ModelStore::open(dir);
        let snapshot = store.load()?;
        Ok(Self::new(store, snapshot, Auth::new(credentials, ttl)))
    }

    pub fn current(&self) -> Arc<Loaded> {
        self.current.read().unwrap().clone()
    }

    fn publish(&self, loaded: Loaded) {
        *self.current.write().unwrap() = Arc::new(loaded);
    }

    /// Validates, persists and publishes a new title for `topic`.
    pub async fn set_title(&self, topic: usize, title: &str) -> Result<Arc<Loaded>> {
        let _gate = self.writer.lock().await;
        let cur = self.current();
        if topic >= cur.titles.len() {
            return Err(Error::OutOfRange {
                what: "topic",
                index: topic,
                len: cur.titles.len(),
            });
        }
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::EmptyTitle);
        }
        let mut titles = cur.titles.as_ref().clone();
        titles[topic] = title.to_owned();
        cur.store.save_titles(&titles)?;
        self.publish(Loaded {
            store: cur.store.clone(),
            snapshot: cur.snapshot.clone(),
            titles: Arc::new(titles),
        });
        Ok(self.current())
    }

    /// Loads `dir` (or the current store again) and swaps it in atomically.
    pub async fn reload(&self, dir: Option<PathBuf>) -> Result<Arc<Loaded>> {
        let _gate = self.writer.lock().await;
        let store = dir.map(ModelStore::open).unwrap_or_else(|| self.current().store.clone());
        let (store, snapshot) = tokio::task::spawn_blocking(move || store.load().map(|s| (store, s)))
            .await
            .map_err(|e| Error::InvalidParameter(format!("reload task failed: {e}")))??;
        let titles = Arc::new(snapshot.model.titles().to_vec());
        self.publish(Loaded {
            store,
            snapshot: Arc::new(snapshot),
            titles,
        });
        Ok(self.current())
    }
}

/// JSON error body `{"error": ..., "stage"?: ...}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub stage: Option<&'static str>,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
            stage: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "authentication required")
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::OutOfRange { .. } | Error::UnknownPatent(_) => StatusCode::NOT_FOUND,
            Error::InvalidParameter(_) | Error::EmptyTitle => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            stage: err.stage(),
            message: err.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = match self.stage {
            Some(stage) => json!({ "error": self.message, "stage": stage }),
            None => json!({ "error": self.message }),
        };
        (self.status, Json(body)).into_response()
    }
}

pub async fn bind(port: u16) -> Result<TcpListener> {
    let addr = format!("0.0.0.0:{port}");
    TcpListener::bind(&addr).await.map_err(|e| Error::io(addr, e))
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, listener: TcpListener) -> Result<()> {
    let addr = listener
        .local_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "listener".into());
    tracing::info!("serving {} on {addr}", state.current().store.dir().display());
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(addr, e))
}
