//! HTTP JSON API over a loaded [`Index64`].
//!
//! | method | path                            | body                                   |
//! |--------|---------------------------------|----------------------------------------|
//! | GET    | `/datasets`                     |                                        |
//! | POST   | `/search/datasets/range`        | `{lo, hi}`                             |
//! | POST   | `/search/datasets/exemplar`     | `{points, metric, k, epsilon?}`        |
//! | POST   | `/datasets/{id}/points/range`   | `{lo, hi}`                             |
//! | POST   | `/datasets/{id}/points/nn`      | `{points}`                             |
//!
//! Errors are `{"error": "..."}` with status 400 (bad request), 404 (unknown
//! dataset), 413 (body over the limit) or 503 (no index loaded).

use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, FromRequest, Path as UrlPath, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use spadas_core::search::{
    exemplar_search, nn_point_search, range_dataset_search, range_point_search, RangeQuery,
};
use spadas_core::{EpsilonPolicy, Error as CoreError, Index64, MetricKind, PointSet};
use tower_http::services::ServeDir;

/// Default request body cap.
pub const DEFAULT_BODY_LIMIT: usize = 16 * 1024 * 1024;

/// The index being served. Swapping it does not disturb requests that already
/// hold the previous one.
#[derive(Clone, Default)]
pub struct AppState {
    index: Arc<RwLock<Option<Arc<Index64>>>>,
}

impl AppState {
    pub fn new(index: Option<Index64>) -> Self {
        Self {
            index: Arc::new(RwLock::new(index.map(Arc::new))),
        }
    }

    pub fn replace(&self, index: Index64) {
        *self.index.write().expect("index lock poisoned") = Some(Arc::new(index));
    }

    pub fn current(&self) -> Option<Arc<Index64>> {
        self.index.read().expect("index lock poisoned").clone()
    }

    fn require(&self) -> Result<Arc<Index64>, ApiError> {
        self.current()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no index loaded"))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::UnknownDataset(_) => Self::new(StatusCode::NOT_FOUND, e.to_string()),
            CoreError::Io(_) | CoreError::Snapshot(_) | CoreError::Checksum | CoreError::Version { .. } => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
            }
            _ => Self::bad(e.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

/// JSON body whose rejections are reported as 400, or 413 when the body was
/// too large.
struct Body<T>(T);

impl<S, T> FromRequest<S> for Body<T>
where
    axum::Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Body(v)),
            Err(e) if e.status() == StatusCode::PAYLOAD_TOO_LARGE => {
                Err(ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, e.body_text()))
            }
            Err(e) => Err(ApiError::bad(e.body_text())),
        }
    }
}

/// Rounds to 12 significant digits.
pub fn round_score(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MbrJson {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub id: u64,
    pub name: String,
    /// Points kept in the index.
    pub point_count: usize,
    /// Points removed as outliers at build time.
    pub removed_count: usize,
    pub mbr: MbrJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeBody {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdsResponse {
    pub ids: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExemplarBody {
    pub points: Vec<Vec<f64>>,
    pub metric: MetricKind,
    pub k: usize,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub id: u64,
    pub score: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitsResponse {
    pub hits: Vec<Hit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsResponse {
    /// Source row indices of the points within the dataset file.
    pub ids: Vec<u32>,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnBody {
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnPairJson {
    /// Position of the query point in the request.
    pub query: usize,
    pub nn: Vec<f64>,
    /// Source row index of the neighbor within the dataset file.
    pub nn_id: u32,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnResponse {
    pub pairs: Vec<NnPairJson>,
}

fn point_set(rows: &[Vec<f64>]) -> Result<PointSet<f64>, ApiError> {
    if rows.is_empty() {
        return Err(ApiError::bad("points must not be empty"));
    }
    Ok(PointSet::from_rows(rows)?)
}

fn range(body: &RangeBody) -> Result<RangeQuery<f64>, ApiError> {
    Ok(RangeQuery::new(body.lo, body.hi)?)
}

/// Runs a search off the async workers.
async fn blocking<R: Send + 'static>(f: impl FnOnce() -> Result<R, ApiError> + Send + 'static) -> Result<R, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn list_datasets(State(state): State<AppState>) -> Result<axum::Json<Vec<DatasetInfo>>, ApiError> {
    let index = state.require()?;
    let out = index
        .entries()
        .iter()
        .map(|e| DatasetInfo {
            id: e.id,
            name: e.name.clone(),
            point_count: e.len(),
            removed_count: e.removed.len(),
            mbr: MbrJson {
                lo: e.mbr().lo().to_vec(),
                hi: e.mbr().hi().to_vec(),
            },
        })
        .collect();
    Ok(axum::Json(out))
}

async fn search_range(
    State(state): State<AppState>,
    Body(body): Body<RangeBody>,
) -> Result<axum::Json<IdsResponse>, ApiError> {
    let index = state.require()?;
    let r = range(&body)?;
    Ok(axum::Json(IdsResponse {
        ids: range_dataset_search(&index, &r),
    }))
}

async fn search_exemplar(
    State(state): State<AppState>,
    Body(body): Body<ExemplarBody>,
) -> Result<axum::Json<HitsResponse>, ApiError> {
    let index = state.require()?;
    if body.k == 0 {
        return Err(ApiError::bad("k must be at least 1"));
    }
    let epsilon = body.epsilon.map(EpsilonPolicy::new).transpose()?;
    let query = point_set(&body.points)?;
    let hits = blocking(move || Ok(exemplar_search(&index, &query, body.metric, body.k, epsilon)?)).await?;
    Ok(axum::Json(HitsResponse {
        hits: hits
            .into_iter()
            .map(|h| Hit {
                id: h.dataset_id,
                score: round_score(h.score),
                rank: h.rank,
            })
            .collect(),
    }))
}

async fn points_range(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<u64>,
    Body(body): Body<RangeBody>,
) -> Result<axum::Json<PointsResponse>, ApiError> {
    let index = state.require()?;
    let r = range(&body)?;
    let (ids, points) = range_point_search(&index, id, &r)?;
    Ok(axum::Json(PointsResponse {
        ids,
        points: points.iter().map(<[f64]>::to_vec).collect(),
    }))
}

async fn points_nn(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<u64>,
    Body(body): Body<NnBody>,
) -> Result<axum::Json<NnResponse>, ApiError> {
    let index = state.require()?;
    index.dataset(id)?;
    let query = point_set(&body.points)?;
    let pairs = blocking(move || Ok(nn_point_search(&index, &query, id, false)?)).await?;
    Ok(axum::Json(NnResponse {
        pairs: pairs
            .into_iter()
            .map(|p| NnPairJson {
                query: p.query_index,
                nn: p.nn,
                nn_id: p.nn_index,
                dist: round_score(p.distance),
            })
            .collect(),
    }))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such endpoint")
}

/// The API routes with a request body cap of `body_limit` bytes.
pub fn router(state: AppState, body_limit: usize) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/search/datasets/range", post(search_range))
        .route("/search/datasets/exemplar", post(search_exemplar))
        .route("/datasets/{id}/points/range", post(points_range))
        .route("/datasets/{id}/points/nn", post(points_nn))
        .layer(DefaultBodyLimit::max(body_limit))
        .with_state(state)
}

/// [`router`] plus static files from `dir` for every other path.
pub fn router_with_static(state: AppState, body_limit: usize, dir: Option<&Path>) -> Router {
    let api = router(state, body_limit);
    match dir {
        Some(d) => api.fallback_service(ServeDir::new(d)),
        None => api.fallback(not_found),
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: String,
    pub body_limit: usize,
    pub static_dir: Option<PathBuf>,
}

/// Binds `config.addr` and serves until ctrl-c.
pub async fn serve(state: AppState, config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&config.addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let app = router_with_static(state, config.body_limit, config.static_dir.as_deref());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_score(1.0 / 3.0), 0.333333333333);
        assert_eq!(round_score(123456.7890123456), 123456.789012);
        assert_eq!(round_score(0.0), 0.0);
        assert_eq!(round_score(2.5), 2.5);
    }
}
