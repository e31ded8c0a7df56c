use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use verbum_core::fuzzy::UnitFuzzyNumber;
use verbum_core::lexicon::Lexicon;
use verbum_service::api::router;
use verbum_service::store::Store;

async fn call(store: &Arc<Store>, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = router(store.clone()).oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn fresh() -> (tempfile::TempDir, Arc<Store>) {
    let dir = tempfile::tempdir().unwrap();
    let store = Arc::new(Store::open(dir.path()).unwrap());
    (dir, store)
}

fn crisp_graph(q: f64) -> Value {
    json!({
        "claim": {"statement": "the batch passes"},
        "grounds": [{"id": "g1", "statement": "sample looked clean", "credibility": {"a": 0.9, "b": 0.9, "c": 0.9, "d": 0.9}}],
        "warrants": [{"id": "w1", "statement": "clean samples mean clean batches", "premises": ["g1"],
                      "quantifier": {"a": q, "b": q, "c": q, "d": q}}],
        "rebuttals": [{"target": "claim", "statement": "supplier changed", "strength": {"a": 0.5, "b": 0.5, "c": 0.5, "d": 0.5}}]
    })
}

#[tokio::test]
async fn argument_session_walks_through_phases() {
    let (_dir, store) = fresh();
    let (st, v) = call(&store, "POST", "/sessions", Some(json!({"kind": "argument"}))).await;
    assert_eq!(st, StatusCode::CREATED);
    assert_eq!(v["session"]["phase"], "building");
    assert_eq!(v["question"]["kind"], "graph");
    let id = v["session"]["id"].as_str().unwrap().to_string();

    let (st, _) = call(&store, "POST", &format!("/sessions/{id}/evaluate"), None).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let answer = json!({"question_id": v["question"]["id"], "version": v["session"]["version"], "payload": {"type": "graph", "graph": crisp_graph(0.7)}});
    let (st, v) = call(&store, "POST", &format!("/sessions/{id}/answers"), Some(answer)).await;
    assert_eq!(st, StatusCode::OK, "{v}");

    let (st, e) = call(&store, "POST", &format!("/sessions/{id}/evaluate"), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(e["outcome"], "evaluated");
    assert_eq!(e["claim"]["b"].as_f64().unwrap(), 0.9 * 0.7 * 0.5);
    assert_eq!(e["label"]["name"], "L2");

    let (_, s) = call(&store, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s["session"]["phase"], "evaluated");
    assert_eq!(s["question"]["kind"], "review");
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let (_dir, store) = fresh();
    let (st, v) = call(&store, "GET", "/sessions/s99", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not_found");

    let (st, _) = call(&store, "POST", "/sessions", Some(json!({"kind": "nonsense"}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);

    let mut bad = crisp_graph(0.7);
    bad["warrants"][0]["premises"] = json!(["missing"]);
    let (st, v) = call(&store, "POST", "/sessions", Some(json!({"kind": "argument", "graph": bad}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY, "{v}");

    let (st, _) = call(&store, "GET", "/lexicons/..secret", None).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn lexicons_default_and_round_trip() {
    let (_dir, store) = fresh();
    let (st, v) = call(&store, "GET", "/lexicons/default", None).await;
    assert_eq!(st, StatusCode::OK);
    let lex: Lexicon = serde_json::from_value(v).unwrap();
    assert_eq!(lex, Lexicon::default_lexicon(5).unwrap());

    let (st, _) = call(&store, "GET", "/lexicons/ann", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);

    let three = Lexicon::default_lexicon(3).unwrap();
    let (st, v) = call(&store, "PUT", "/lexicons/ann", Some(serde_json::to_value(&three).unwrap())).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["owner"], "ann");
    let (_, back) = call(&store, "GET", "/lexicons/ann", None).await;
    assert_eq!(back, v);
}

#[tokio::test]
async fn pooling_check_reports_overlap_and_pool() {
    let (_dir, store) = fresh();
    let half = json!({"a": 0.4, "b": 0.5, "c": 0.5, "d": 0.6});
    let req = json!({
        "first": {"expert": "a", "grounds": {"g1": half, "g2": half, "g3": half}},
        "second": {"expert": "b", "grounds": {"g2": half, "g3": half, "g4": half, "g5": half}},
        "evaluations": [{"a": 0.2, "b": 0.3, "c": 0.3, "d": 0.4}, {"a": 0.4, "b": 0.5, "c": 0.5, "d": 0.6}]
    });
    let (st, v) = call(&store, "POST", "/pooling/check", Some(req.clone())).await;
    assert_eq!(st, StatusCode::OK);
    assert!((v["overlap"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["admissible"], true);
    let pooled: UnitFuzzyNumber = serde_json::from_value(v["pooled"].clone()).unwrap();
    assert!((pooled.median() - 0.4).abs() < 1e-12);

    let mut strict = req;
    strict["theta"] = json!(0.9);
    let (_, v) = call(&store, "POST", "/pooling/check", Some(strict)).await;
    assert_eq!(v["admissible"], false);
    assert!(v.get("pooled").is_none());
}

#[tokio::test]
async fn elicitation_session_stores_lexicon() {
    let (dir, store) = fresh();
    let truth = Lexicon::default_lexicon(3).unwrap();
    let req = json!({
        "kind": "elicitation",
        "owner": "bo",
        "labels": ["L1", "L2", "L3"],
        "config": {"trials": 40, "step_c": 0.2, "scan_repeats": 2, "ordering_tolerance": 0.05}
    });
    let (st, mut v) = call(&store, "POST", "/sessions", Some(req)).await;
    assert_eq!(st, StatusCode::CREATED, "{v}");
    let id = v["session"]["id"].as_str().unwrap().to_string();
    let mut asked = 0;
    while v["question"].is_object() && v["question"]["kind"] == "stimulus" {
        let label = v["question"]["label"].as_str().unwrap();
        let x = v["question"]["stimulus"].as_f64().unwrap();
        let accepted = truth.get(label).unwrap().meaning.membership(x).unwrap() >= 0.5;
        let answer = json!({"question_id": v["question"]["id"], "version": v["session"]["version"],
                            "payload": {"type": "response", "accepted": accepted}});
        let (st, next) = call(&store, "POST", &format!("/sessions/{id}/answers"), Some(answer)).await;
        assert_eq!(st, StatusCode::OK, "{next}");
        v = next;
        asked += 1;
        assert!(asked < 10_000);
    }
    assert_eq!(v["session"]["phase"], "calibrated");
    let (st, lex) = call(&store, "GET", "/lexicons/bo", None).await;
    assert_eq!(st, StatusCode::OK);
    let lex: Lexicon = serde_json::from_value(lex).unwrap();
    for (got, want) in lex.labels().iter().zip(truth.labels()) {
        assert!((got.meaning.median() - want.meaning.median()).abs() < 0.1, "{got:?} vs {want:?}");
    }
    assert!(dir.path().join("lexicons/bo.json").exists());
}
