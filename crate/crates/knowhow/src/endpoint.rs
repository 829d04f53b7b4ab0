//! The HTTP knowledge-base endpoint: `/sparql`, `/publish` and `/health`.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Query as UrlQuery, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use knowhow_core::query::parse_query;
use knowhow_core::rdf::parse_turtle;
use tower_http::cors::CorsLayer;

use crate::results;
use crate::store::{Store, StoreError};

pub const DEFAULT_MAX_ROWS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    pub bind: String,
    pub data_file: Option<PathBuf>,
    pub read_only: bool,
    pub max_query_rows: usize,
    /// Served verbatim at `/federation.json` for browser clients.
    pub federation_file: Option<PathBuf>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            bind: "127.0.0.1:8080".into(),
            data_file: None,
            read_only: false,
            max_query_rows: DEFAULT_MAX_ROWS,
            federation_file: None,
        }
    }
}

#[derive(Debug)]
pub struct Endpoint {
    pub store: Store,
    pub read_only: bool,
    pub max_query_rows: usize,
    pub federation_json: Option<String>,
}

impl Endpoint {
    pub fn new(store: Store) -> Self {
        Endpoint {
            store,
            read_only: false,
            max_query_rows: DEFAULT_MAX_ROWS,
            federation_json: None,
        }
    }

    pub fn from_config(config: &EndpointConfig) -> Result<Self, EndpointStartError> {
        if config.max_query_rows == 0 {
            return Err(EndpointStartError::MaxRows);
        }
        let store = match &config.data_file {
            Some(path) => Store::open(path)?,
            None => Store::in_memory(Default::default()),
        };
        let federation_json = match &config.federation_file {
            Some(path) => Some(std::fs::read_to_string(path).map_err(|source| EndpointStartError::Io {
                what: format!("federation file {}", path.display()),
                source,
            })?),
            None => None,
        };
        Ok(Endpoint {
            store,
            read_only: config.read_only,
            max_query_rows: config.max_query_rows,
            federation_json,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EndpointStartError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("--max-rows must be at least 1")]
    MaxRows,
    #[error("cannot use {what}: {source}")]
    Io { what: String, source: std::io::Error },
}

fn plain(status: StatusCode, message: impl Into<String>) -> Response {
    (status, [(header::CONTENT_TYPE, "text/plain; charset=utf-8")], message.into()).into_response()
}

fn run_query(endpoint: &Endpoint, text: Option<&str>) -> Response {
    let Some(text) = text else {
        return plain(StatusCode::BAD_REQUEST, "missing `query` parameter\n");
    };
    let query = match parse_query(text) {
        Ok(q) => q,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    let mut set = endpoint.store.query(&query);
    let truncated = set.rows.len() > endpoint.max_query_rows;
    set.rows.truncate(endpoint.max_query_rows);
    let mut response = (
        [(header::CONTENT_TYPE, HeaderValue::from_static(results::CONTENT_TYPE))],
        results::to_json(&set),
    )
        .into_response();
    if truncated {
        response
            .headers_mut()
            .insert("x-truncated", HeaderValue::from_static("true"));
    }
    response
}

async fn sparql_get(State(ep): State<Arc<Endpoint>>, UrlQuery(params): UrlQuery<HashMap<String, String>>) -> Response {
    run_query(&ep, params.get("query").map(String::as_str))
}

async fn sparql_post(State(ep): State<Arc<Endpoint>>, headers: HeaderMap, body: Bytes) -> Response {
    let content_type = media_type(&headers);
    match content_type.as_deref() {
        Some("application/sparql-query") => match std::str::from_utf8(&body) {
            Ok(text) => run_query(&ep, Some(text)),
            Err(_) => plain(StatusCode::BAD_REQUEST, "query is not UTF-8\n"),
        },
        Some("application/x-www-form-urlencoded") | None => {
            let form: HashMap<String, String> = match serde_urlencoded::from_bytes(&body) {
                Ok(f) => f,
                Err(e) => return plain(StatusCode::BAD_REQUEST, format!("bad form body: {e}\n")),
            };
            run_query(&ep, form.get("query").map(String::as_str))
        }
        Some(other) => plain(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            format!("unsupported content type `{other}`\n"),
        ),
    }
}

fn media_type(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .map(|v| v.split(';').next().unwrap_or("").trim().to_ascii_lowercase())
}

async fn publish(State(ep): State<Arc<Endpoint>>, headers: HeaderMap, body: Bytes) -> Response {
    if ep.read_only {
        return plain(StatusCode::FORBIDDEN, "this endpoint is read-only\n");
    }
    match media_type(&headers).as_deref() {
        None | Some("text/turtle") | Some("application/x-turtle") => {}
        Some(other) => {
            return plain(
                StatusCode::UNSUPPORTED_MEDIA_TYPE,
                format!("expected text/turtle, got `{other}`\n"),
            )
        }
    }
    let Ok(text) = std::str::from_utf8(&body) else {
        return plain(StatusCode::BAD_REQUEST, "body is not UTF-8\n");
    };
    let graph = match parse_turtle(text, None) {
        Ok(g) => g,
        Err(e) => return plain(StatusCode::BAD_REQUEST, format!("{e}\n")),
    };
    // the store lock is synchronous and the flush does disk IO
    let ep2 = ep.clone();
    match tokio::task::spawn_blocking(move || ep2.store.publish(graph)).await {
        Ok(Ok(inserted)) => Json(serde_json::json!({ "inserted": inserted })).into_response(),
        Ok(Err(e)) => {
            tracing::error!("publish failed: {e}");
            plain(StatusCode::INTERNAL_SERVER_ERROR, format!("{e}\n"))
        }
        Err(e) => plain(StatusCode::INTERNAL_SERVER_ERROR, format!("{e}\n")),
    }
}

async fn health(State(ep): State<Arc<Endpoint>>) -> Response {
    Json(serde_json::json!({ "tripleCount": ep.store.len() })).into_response()
}

async fn federation(State(ep): State<Arc<Endpoint>>) -> Response {
    match &ep.federation_json {
        Some(text) => ([(header::CONTENT_TYPE, "application/json")], text.clone()).into_response(),
        None => plain(StatusCode::NOT_FOUND, "no federation file configured\n"),
    }
}

pub fn router(endpoint: Arc<Endpoint>) -> Router {
    Router::new()
        .route("/sparql", get(sparql_get).post(sparql_post))
        .route("/publish", axum::routing::post(publish))
        .route("/health", get(health))
        .route("/federation.json", get(federation))
        .layer(CorsLayer::permissive())
        .with_state(endpoint)
}

/// A running endpoint bound to a local address.
pub struct RunningEndpoint {
    pub addr: SocketAddr,
    pub endpoint: Arc<Endpoint>,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    task: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl RunningEndpoint {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn stop(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Binds `addr` and serves `endpoint` in the background.
pub async fn spawn(endpoint: Arc<Endpoint>, addr: &str) -> std::io::Result<RunningEndpoint> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let app = router(endpoint.clone());
    let task = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(RunningEndpoint {
        addr: local,
        endpoint,
        shutdown: Some(tx),
        task,
    })
}
