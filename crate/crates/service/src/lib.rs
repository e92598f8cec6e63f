//! Read-only HTTP API over a rankscope artifact store.
//!
//! Endpoints (all `GET`, JSON bodies, gzip when the client accepts it):
//!
//! - `/datasets`, `/datasets/{id}/years`, `/datasets/{id}/attributes`, `/datasets/{id}/rankers`
//! - `/deviation`, `/explanations`, `/correlation`, `/compare` (range queries, see [`query`])
//! - `/agreement?dataset=&ranker=&year=`
//!
//! Errors are `{code, message, detail}` with a 4xx/5xx status. The store is
//! treated as immutable while the service runs, so response bodies are
//! cached by decoded query without invalidation.

pub mod cache;
pub mod config;
pub mod error;
pub mod query;
pub mod views;

use std::sync::Arc;

use axum::extract::{Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use rankscope::store::Store;
use serde::Serialize;
use tower_http::compression::CompressionLayer;

pub use cache::ResponseCache;
pub use config::ServiceConfig;
pub use error::{ServiceError, ServiceResult};
pub use query::RangeQuery;

pub struct AppState {
    pub store: Store,
    pub cache: ResponseCache,
}

impl AppState {
    pub fn new(store: Store, cache_size: usize) -> Self {
        AppState {
            store,
            cache: ResponseCache::new(cache_size),
        }
    }
}

type Shared = Arc<AppState>;

fn json_bytes<T: Serialize>(value: &T) -> ServiceResult<Vec<u8>> {
    serde_json::to_vec(value).map_err(|e| ServiceError::Internal(format!("cannot encode response: {e}")))
}

fn json_response(body: Arc<Vec<u8>>) -> Response {
    (
        StatusCode::OK,
        [(header::CONTENT_TYPE, "application/json")],
        body.as_ref().clone(),
    )
        .into_response()
}

/// Runs `compute` off the async executor, caching successful bodies under `key`.
async fn cached<F>(state: Shared, key: String, compute: F) -> Response
where
    F: FnOnce(&Store) -> ServiceResult<Vec<u8>> + Send + 'static,
{
    if let Some(body) = state.cache.get(&key) {
        return json_response(body);
    }
    let st = state.clone();
    let result = tokio::task::spawn_blocking(move || compute(&st.store))
        .await
        .unwrap_or_else(|e| Err(ServiceError::Internal(format!("request task failed: {e}"))));
    match result {
        Ok(bytes) => {
            let body = Arc::new(bytes);
            state.cache.insert(key, body.clone());
            json_response(body)
        }
        Err(e) => e.into_response(),
    }
}

async fn datasets(State(s): State<Shared>) -> Response {
    cached(s, "datasets".into(), |st| json_bytes(&views::datasets(st)?)).await
}

async fn years(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    cached(s, format!("years:{id}"), move |st| json_bytes(&views::years(st, &id)?)).await
}

async fn attributes(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    cached(s, format!("attributes:{id}"), move |st| json_bytes(&views::attributes(st, &id)?)).await
}

async fn rankers(State(s): State<Shared>, Path(id): Path<String>) -> Response {
    cached(s, format!("rankers:{id}"), move |st| json_bytes(&views::rankers(st, &id)?)).await
}

fn raw(q: Option<String>) -> String {
    q.unwrap_or_default()
}

async fn deviation(State(s): State<Shared>, RawQuery(q): RawQuery) -> Response {
    match RangeQuery::parse(&raw(q)) {
        Ok(q) => cached(s, format!("deviation:{q:?}"), move |st| json_bytes(&views::deviation(st, &q)?)).await,
        Err(e) => e.into_response(),
    }
}

async fn explanations(State(s): State<Shared>, RawQuery(q): RawQuery) -> Response {
    match RangeQuery::parse(&raw(q)) {
        Ok(q) => cached(s, format!("explanations:{q:?}"), move |st| json_bytes(&views::explanations(st, &q)?)).await,
        Err(e) => e.into_response(),
    }
}

async fn correlation(State(s): State<Shared>, RawQuery(q): RawQuery) -> Response {
    match views::CorrelationQuery::parse(&raw(q)) {
        Ok(q) => cached(s, format!("correlation:{q:?}"), move |st| json_bytes(&views::correlation(st, &q)?)).await,
        Err(e) => e.into_response(),
    }
}

async fn agreement(State(s): State<Shared>, RawQuery(q): RawQuery) -> Response {
    match views::AgreementQuery::parse(&raw(q)) {
        Ok(q) => cached(s, format!("agreement:{q:?}"), move |st| views::agreement(st, &q)).await,
        Err(e) => e.into_response(),
    }
}

async fn compare(State(s): State<Shared>, RawQuery(q): RawQuery) -> Response {
    match views::CompareQuery::parse(&raw(q)) {
        Ok(q) => cached(s, format!("compare:{q:?}"), move |st| json_bytes(&views::compare(st, &q)?)).await,
        Err(e) => e.into_response(),
    }
}

async fn not_found() -> Response {
    ServiceError::NotFound("no such endpoint".into()).into_response()
}

pub fn router(state: AppState) -> Router {
    router_with_static(state, None)
}

/// Like [`router`], with unmatched paths served from a static UI bundle.
pub fn router_with_static(state: AppState, static_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/datasets", get(datasets))
        .route("/datasets/{id}/years", get(years))
        .route("/datasets/{id}/attributes", get(attributes))
        .route("/datasets/{id}/rankers", get(rankers))
        .route("/deviation", get(deviation))
        .route("/explanations", get(explanations))
        .route("/correlation", get(correlation))
        .route("/agreement", get(agreement))
        .route("/compare", get(compare));
    let api = match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api.fallback(not_found),
    };
    api.layer(CompressionLayer::new()).with_state(Arc::new(state))
}

/// Binds and serves until ctrl-c.
pub async fn serve(cfg: &ServiceConfig) -> rankscope::Result<()> {
    let addr = cfg.addr()?;
    if !cfg.store.is_dir() {
        return Err(rankscope::Error::Config(format!("store {} does not exist", cfg.store.display())));
    }
    let app = router_with_static(AppState::new(Store::new(&cfg.store), cfg.cache_size), cfg.static_dir.as_deref());
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| rankscope::Error::Config(format!("cannot bind {addr}: {e}")))?;
    log::info!("serving {} on http://{addr}", cfg.store.display());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| rankscope::Error::Config(format!("server error: {e}")))
}
