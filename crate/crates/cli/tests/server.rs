use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use datasetlens::config::{build, FlagOverrides};
use datasetlens::server::{router, AppState, Cached, MemoCache, ENDPOINTS};
use datasetlens_core::dataset::{attach_feature_store, AnnotatedDataset};
use datasetlens_core::insight::{AnalysisContext, MetricReport};
use datasetlens_core::synthetic::toy_dataset;
use datasetlens_core::{Gender, RunConfig};
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

fn toy_config() -> RunConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/toy/config.toml");
    build(Some(&path), &FlagOverrides::default(), Vec::new()).unwrap()
}

fn state(ctx: AnalysisContext, cap: usize) -> Arc<AppState> {
    Arc::new(AppState {
        ctx,
        cache: MemoCache::new(cap),
    })
}

async fn get(state: &Arc<AppState>, uri: &str) -> (StatusCode, Value, String) {
    let response = router(state.clone())
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    (status, serde_json::from_str(&text).unwrap(), text)
}

fn result_of(report: &MetricReport, id: &str) -> Value {
    report.metric(id).unwrap().result.clone().unwrap()
}

fn first_keyed(report: &MetricReport, id: &str) -> Value {
    result_of(report, id)["results"][0].clone()
}

fn drop_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("generated_at");
    v
}

#[tokio::test]
async fn endpoints_match_report_fragments() {
    let ctx = AnalysisContext::load(toy_config()).unwrap();
    let report = ctx.generate_report().unwrap();
    let state = state(ctx, 64);

    let (status, body, _) = get(&state, "/api/v1").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["endpoints"].as_array().unwrap().len(), ENDPOINTS.len());

    let whole = serde_json::to_value(&report).unwrap();
    let (status, body, _) = get(&state, "/api/v1/report").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(drop_timestamp(body), drop_timestamp(whole));

    let plain = [
        ("object/counts", "object_counts"),
        ("object/scale", "object_scale"),
        ("object/cooccurrence", "cooccurrence"),
        ("object/duplicates", "duplicate_annotations"),
        ("object/scene-diversity", "scene_diversity"),
        ("object/appearance-diversity", "appearance_diversity"),
        ("gender/context", "contextual_representation"),
        ("gender/counts", "gendered_counts"),
        ("gender/audit", "gender_label_audit"),
        ("geo/countries", "country_distribution"),
        ("geo/language", "local_language"),
        ("geo/tags", "tag_representation"),
    ];
    for (endpoint, id) in plain {
        let (status, body, _) = get(&state, &format!("/api/v1/{endpoint}")).await;
        assert_eq!(status, StatusCode::OK, "{endpoint}");
        assert_eq!(body, result_of(&report, id), "{endpoint}");
    }

    let distance = first_keyed(&report, "person_object_distance");
    let (_, body, _) = get(&state, &format!("/api/v1/gender/distance?category={}", distance["category"].as_str().unwrap())).await;
    assert_eq!(body, distance);

    let sep = first_keyed(&report, "appearance_separability");
    let (_, body, _) = get(&state, &format!("/api/v1/gender/separability?category={}", sep["category"].as_str().unwrap())).await;
    assert_eq!(body, sep);

    let sub = first_keyed(&report, "subregion_separability");
    let (_, body, _) = get(&state, &format!("/api/v1/geo/subregion?tag={}", sub["tag"].as_str().unwrap())).await;
    assert_eq!(body, sub);

    let rec = first_keyed(&report, "query_recommendations");
    let uri = format!(
        "/api/v1/insights/recommend?target={}&outcome={}",
        rec["target"].as_str().unwrap(),
        rec["outcome"].as_str().unwrap()
    );
    let (_, body, _) = get(&state, &uri).await;
    assert_eq!(body, rec);

    let trade = first_keyed(&report, "diversity_tradeoff");
    let (_, body, _) = get(&state, &format!("/api/v1/insights/tradeoff?target={}", trade["target"].as_str().unwrap())).await;
    assert_eq!(body, trade);
}

#[tokio::test]
async fn missing_gender_labels_give_422() {
    let (ds, store) = toy_dataset(2020);
    let mut images = ds.images().to_vec();
    for img in &mut images {
        img.gender_label = Gender::Unknown;
    }
    let bare = AnnotatedDataset::new(images, ds.instances().to_vec(), ds.categories().clone(), ds.provenance().clone())
        .unwrap();
    let ds = attach_feature_store(bare, store).unwrap().0;
    let state = state(AnalysisContext::from_dataset(ds, RunConfig::default()), 8);
    let (status, body, _) = get(&state, "/api/v1/gender/audit").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "missing_annotations");
    assert_eq!(body["missing"], serde_json::json!(["gender_labels"]));
    let (status, _, _) = get(&state, "/api/v1/object/counts").await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn client_errors() {
    let state = state(AnalysisContext::load(toy_config()).unwrap(), 8);
    let cases = [
        ("/api/v1/object/scale?category=zebra", StatusCode::NOT_FOUND, "unknown_entity"),
        ("/api/v1/gender/distance", StatusCode::BAD_REQUEST, "bad_request"),
        ("/api/v1/insights/recommend?target=dog&outcome=colour:red", StatusCode::BAD_REQUEST, "bad_request"),
        ("/api/v1/insights/recommend?target=dog&outcome=size:XS&min_support=9999", StatusCode::UNPROCESSABLE_ENTITY, "insufficient_samples"),
        ("/api/v1/geo/tags?country=ZZ", StatusCode::NOT_FOUND, "unknown_entity"),
        ("/api/v1/nope", StatusCode::NOT_FOUND, "unknown_endpoint"),
    ];
    for (uri, want, code) in cases {
        let (status, body, _) = get(&state, uri).await;
        assert_eq!(status, want, "{uri}");
        assert_eq!(body["code"], code, "{uri}");
    }
}

#[tokio::test]
async fn repeated_requests_are_identical_and_cache_is_bounded() {
    let state = state(AnalysisContext::load(toy_config()).unwrap(), 2);
    let uri = "/api/v1/insights/recommend?target=dog&outcome=size:XS,S";
    let (_, _, first) = get(&state, uri).await;
    let (_, _, second) = get(&state, uri).await;
    assert_eq!(first, second);
    for endpoint in ["object/counts", "object/scale", "object/duplicates", "gender/counts"] {
        get(&state, &format!("/api/v1/{endpoint}")).await;
        assert!(state.cache.len() <= 2);
    }
    let (_, _, third) = get(&state, uri).await;
    assert_eq!(first, third);
}

#[test]
fn memo_cache_keeps_first_write_and_evicts_oldest() {
    let cache = MemoCache::new(2);
    let v = |s: &str| Cached {
        status: StatusCode::OK,
        body: s.into(),
    };
    assert_eq!(cache.publish("a".into(), v("1")).body, "1");
    assert_eq!(cache.publish("a".into(), v("2")).body, "1");
    cache.publish("b".into(), v("3"));
    cache.publish("c".into(), v("4"));
    assert_eq!(cache.len(), 2);
    assert!(cache.get("a").is_none());
    assert_eq!(cache.get("c").unwrap().body, "4");

    let off = MemoCache::new(0);
    off.publish("a".into(), v("1"));
    assert!(off.is_empty());
}
