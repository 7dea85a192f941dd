//! Read-only HTTP view over an [`AnalysisContext`].
//!
//! Every endpoint calls the same context method that fills the matching
//! report fragment. Responses are memoized in a bounded cache.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::net::SocketAddr;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use datasetlens_core::config::ProbabilityUnit;
use datasetlens_core::dataset::Annotation;
use datasetlens_core::insight::AnalysisContext;
use datasetlens_core::MetricError;
use serde::Serialize;
use serde_json::Value;

/// Endpoints under `/api/v1`, in documentation order.
pub const ENDPOINTS: [&str; 18] = [
    "report",
    "object/counts",
    "object/scale",
    "object/cooccurrence",
    "object/duplicates",
    "object/scene-diversity",
    "object/appearance-diversity",
    "gender/context",
    "gender/counts",
    "gender/distance",
    "gender/audit",
    "gender/separability",
    "geo/countries",
    "geo/language",
    "geo/tags",
    "geo/subregion",
    "insights/recommend",
    "insights/tradeoff",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub missing: Vec<Annotation>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            missing: Vec::new(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl From<MetricError> for ApiError {
    fn from(e: MetricError) -> Self {
        let message = e.to_string();
        match e {
            MetricError::MissingAnnotations(missing) => Self {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "missing_annotations",
                message,
                missing,
            },
            MetricError::UnknownCategory(_) | MetricError::UnknownTerm(_) | MetricError::UnknownCountry(_) => {
                Self::new(StatusCode::NOT_FOUND, "unknown_entity", message)
            }
            MetricError::InvalidOutcome(_) => Self::bad_request(message),
            MetricError::InsufficientSamples(_) | MetricError::NoCandidates(_) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "insufficient_samples", message)
            }
            MetricError::NothingComputable => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "nothing_computable", message),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message),
        }
    }
}

type QueryMap = BTreeMap<String, String>;

fn required<'a>(q: &'a QueryMap, key: &str) -> Result<&'a str, ApiError> {
    q.get(key)
        .map(String::as_str)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| ApiError::bad_request(format!("query parameter {key:?} is required")))
}

fn json<T: Serialize>(r: Result<T, MetricError>) -> Result<Value, ApiError> {
    Ok(serde_json::to_value(r?).expect("fragments serialize"))
}

/// Computes one endpoint's payload.
pub fn fragment(ctx: &AnalysisContext, endpoint: &str, q: &QueryMap) -> Result<Value, ApiError> {
    let category = q.get("category").map(String::as_str);
    match endpoint {
        "report" => json(ctx.generate_report()),
        "object/counts" => json(ctx.object_counts()),
        "object/scale" => match category {
            Some(c) => json(ctx.scale_for(c)),
            None => json(ctx.scale()),
        },
        "object/cooccurrence" => match (q.get("a"), q.get("b")) {
            (Some(a), Some(b)) => json(ctx.cooccurrence_pair(a, b)),
            (None, None) => json(ctx.cooccurrence()),
            _ => Err(ApiError::bad_request("give both a and b, or neither")),
        },
        "object/duplicates" => json(ctx.duplicates()),
        "object/scene-diversity" => json(ctx.scene_diversity()),
        "object/appearance-diversity" => {
            let all = ctx.appearance_diversity();
            match category {
                None => json(all),
                Some(c) => {
                    if !ctx.dataset().categories().contains(c) {
                        return Err(MetricError::UnknownCategory(c.into()).into());
                    }
                    let found = all?.get(c).cloned();
                    json(found.ok_or_else(|| MetricError::InsufficientSamples(format!("{c:?} has fewer than two embedded instances"))))
                }
            }
        }
        "gender/context" => json(ctx.gender_context()),
        "gender/counts" => json(ctx.gender_counts()),
        "gender/distance" => json(ctx.gender_distance(required(q, "category")?)),
        "gender/audit" => json(ctx.gender_audit()),
        "gender/separability" => json(ctx.gender_separability(required(q, "category")?)),
        "geo/countries" => json(ctx.country_distribution()),
        "geo/language" => json(ctx.local_language()),
        "geo/tags" => match q.get("country") {
            Some(c) => json(ctx.tags_for(c)),
            None => json(ctx.tags()),
        },
        "geo/subregion" => json(ctx.subregion(required(q, "tag")?)),
        "insights/recommend" => {
            let min_support = match q.get("min_support") {
                Some(s) => Some(s.parse::<u64>().map_err(|_| ApiError::bad_request("min_support must be an integer"))?),
                None => None,
            };
            let unit = match q.get("unit") {
                Some(u) => Some(
                    serde_json::from_value::<ProbabilityUnit>(Value::String(u.clone()))
                        .map_err(|_| ApiError::bad_request("unit must be per_image or per_instance"))?,
                ),
                None => None,
            };
            json(ctx.recommend(required(q, "target")?, required(q, "outcome")?, min_support, unit))
        }
        "insights/tradeoff" => json(ctx.tradeoff(required(q, "target")?)),
        other => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_endpoint",
            format!("no endpoint /api/v1/{other}"),
        )),
    }
}

/// Entries by key plus insertion order for eviction.
type Slots = (HashMap<String, Arc<Cached>>, VecDeque<String>);

/// A serialized response.
#[derive(Clone, Debug, PartialEq)]
pub struct Cached {
    pub status: StatusCode,
    pub body: String,
}

impl IntoResponse for Cached {
    fn into_response(self) -> Response {
        (self.status, [(header::CONTENT_TYPE, "application/json")], self.body).into_response()
    }
}

/// Bounded response memo. Readers share a lock; a computed entry is published
/// under the write lock only if no other request published it first, so
/// every caller of a key sees the same body.
pub struct MemoCache {
    capacity: usize,
    inner: RwLock<Slots>,
}

impl MemoCache {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            inner: RwLock::new((HashMap::new(), VecDeque::new())),
        }
    }

    pub fn get(&self, key: &str) -> Option<Arc<Cached>> {
        self.inner.read().expect("cache lock").0.get(key).cloned()
    }

    /// Publishes `value` unless the key is already present; returns the stored entry.
    pub fn publish(&self, key: String, value: Cached) -> Arc<Cached> {
        if self.capacity == 0 {
            return Arc::new(value);
        }
        let mut guard = self.inner.write().expect("cache lock");
        let (map, order) = &mut *guard;
        if let Some(existing) = map.get(&key) {
            return existing.clone();
        }
        while map.len() >= self.capacity {
            match order.pop_front() {
                Some(old) => {
                    map.remove(&old);
                }
                None => break,
            }
        }
        let entry = Arc::new(value);
        map.insert(key.clone(), entry.clone());
        order.push_back(key);
        entry
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct AppState {
    pub ctx: AnalysisContext,
    pub cache: MemoCache,
}

fn render(result: Result<Value, ApiError>) -> Cached {
    match result {
        Ok(v) => Cached {
            status: StatusCode::OK,
            body: serde_json::to_string(&v).expect("values serialize"),
        },
        Err(e) => Cached {
            status: e.status,
            body: serde_json::to_string(&e).expect("errors serialize"),
        },
    }
}

async fn dispatch(State(state): State<Arc<AppState>>, Path(rest): Path<String>, Query(q): Query<QueryMap>) -> Cached {
    let key = format!("{rest}?{}", serde_json::to_string(&q).expect("query serializes"));
    if let Some(hit) = state.cache.get(&key) {
        return (*hit).clone();
    }
    let worker = state.clone();
    let computed = tokio::task::spawn_blocking(move || render(fragment(&worker.ctx, &rest, &q)))
        .await
        .unwrap_or_else(|e| render(Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))));
    if computed.status.is_server_error() {
        return computed;
    }
    (*state.cache.publish(key, computed)).clone()
}

async fn index() -> Cached {
    let listing: Vec<String> = ENDPOINTS.iter().map(|e| format!("/api/v1/{e}")).collect();
    render(Ok(serde_json::json!({ "endpoints": listing })))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/v1", get(index))
        .route("/api/v1/{*rest}", get(dispatch))
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    eprintln!("serving /api/v1 on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok(body: &str) -> Cached {
        Cached {
            status: StatusCode::OK,
            body: body.into(),
        }
    }

    #[test]
    fn cache_is_bounded_and_first_write_wins() {
        let c = MemoCache::new(2);
        assert_eq!(c.publish("a".into(), ok("1")).body, "1");
        assert_eq!(c.publish("a".into(), ok("2")).body, "1");
        c.publish("b".into(), ok("3"));
        c.publish("c".into(), ok("4"));
        assert_eq!(c.len(), 2);
        assert!(c.get("a").is_none());
        assert_eq!(c.get("c").unwrap().body, "4");
    }

    #[test]
    fn zero_capacity_disables_caching() {
        let c = MemoCache::new(0);
        c.publish("a".into(), ok("1"));
        assert!(c.is_empty());
    }
}
