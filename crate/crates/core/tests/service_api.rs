use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use botmatch::content::{lda_fit, LdaConfig};
use botmatch::dataset::{account_matrix, Dataset};
use botmatch::embedding::Metric;
use botmatch::eval::{gen_planted_graph, gen_posts, gen_topic_corpus};
use botmatch::ingest::{assemble_dataset, build_edges};
use botmatch::knn::SearchSpace;
use botmatch::randstring::{gen_benchmark, train, TrainConfig};
use botmatch::service::session::SessionStore;
use botmatch::service::{router, AppState};
use botmatch::text::{TermWeighting, VocabConfig};

fn planted_dataset() -> Dataset {
    let planted = gen_planted_graph(&[30, 30], 0.2, 0.01, 5).unwrap();
    let docs = gen_topic_corpus(&planted.blocks, 30, 80, 0.2, 5).unwrap();
    let posts = gen_posts(&planted, &docs, 20, 5).unwrap();
    let edges = build_edges(&posts);
    let (accounts, edges) = assemble_dataset(&posts, &edges, false).unwrap();
    let mut ds = Dataset::from_parts("planted", "planted", accounts, &edges, Some(planted.labels.clone())).unwrap();
    let tf = account_matrix(&ds.docs(), &VocabConfig::default(), TermWeighting::Tf).unwrap();
    let ids = ds.graph().ids().to_vec();
    let (_, lda) = lda_fit(&tf, &ids, &LdaConfig { topics: 4, iters: 50, seed: 1, ..Default::default() }, Metric::Cosine).unwrap();
    ds.insert_space(SearchSpace::Vectors(lda));
    ds
}

fn name_model() -> botmatch::randstring::LogisticModel {
    let (pos, neg) = gen_benchmark(200, 1);
    train(&pos, &neg, &TrainConfig { epochs: 3, ..Default::default() }).unwrap()
}

fn app_with(store: SessionStore) -> Router {
    router(Arc::new(AppState::new(vec![planted_dataset()], store, Some(name_model()))))
}

fn app() -> Router {
    app_with(SessionStore::in_memory())
}

async fn raw(app: &Router, method: &str, uri: &str, body: Option<String>) -> (StatusCode, String) {
    let builder = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => builder.header("content-type", "application/json").body(Body::from(b)).unwrap(),
        None => builder.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, text) = raw(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

async fn new_session(app: &Router) -> String {
    let (status, s) = call(app, "POST", "/sessions", Some(json!({"dataset": "planted", "space": "lda"}))).await;
    assert_eq!(status, StatusCode::CREATED);
    s["session_id"].as_str().unwrap().to_string()
}

fn is_utc_timestamp(s: &str) -> bool {
    s.ends_with('Z') && chrono::DateTime::parse_from_rfc3339(s).is_ok()
}

#[tokio::test]
async fn health_reports_ok() {
    let (status, body) = call(&app(), "GET", "/health", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!({"status": "ok"}));
}

#[tokio::test]
async fn empty_config_lists_no_datasets() {
    let app = router(Arc::new(AppState::new(vec![], SessionStore::in_memory(), None)));
    let (status, body) = call(&app, "GET", "/datasets", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!([]));
}

#[tokio::test]
async fn datasets_and_spaces_are_listed() {
    let app = app();
    let (_, body) = call(&app, "GET", "/datasets", None).await;
    assert_eq!(body[0]["name"], "planted");
    assert_eq!(body[0]["labeled"], true);
    let (status, spaces) = call(&app, "GET", "/datasets/planted/spaces", None).await;
    assert_eq!(status, StatusCode::OK);
    let names: Vec<&str> = spaces.as_array().unwrap().iter().map(|s| s["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["cosine", "jaccard", "lda", "sybilrank"]);
    let lda = spaces.as_array().unwrap().iter().find(|s| s["name"] == "lda").unwrap();
    assert_eq!(lda["dim"], 4);
    assert_eq!(lda["metric"], "cosine");
    let (status, err) = call(&app, "GET", "/datasets/nope/spaces", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["code"], "dataset_not_found");
}

#[tokio::test]
async fn query_flag_and_read_back() {
    let app = app();
    let id = new_session(&app).await;

    let (status, reply) = call(&app, "POST", &format!("/sessions/{id}/query"), Some(json!({"seeds": ["n0000"], "k": 5}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(reply["query_id"], "q1");
    assert_eq!(reply["parent"], Value::Null);
    let hits = reply["result"]["hits"].as_array().unwrap();
    assert_eq!(hits.len(), 5);
    assert_eq!(reply["result"]["space"], "lda");
    let ranks: Vec<u64> = hits.iter().map(|h| h["rank"].as_u64().unwrap()).collect();
    assert_eq!(ranks, [1, 2, 3, 4, 5]);
    let cards = reply["cards"].as_array().unwrap();
    assert_eq!(cards.len(), 5);
    for card in cards {
        let p = card["random_string_probability"].as_f64().unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(card["n_posts"].as_u64().unwrap() >= 1);
    }

    let top = hits[0]["id"].as_str().unwrap().to_string();
    let (status, flags) =
        call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": top, "state": "suspicious"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(flags["flags"][&top]["state"], "suspicious");

    let (status, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["flags"][&top]["state"], "suspicious");
    assert!(is_utc_timestamp(session["flags"][&top]["timestamp"].as_str().unwrap()));
    assert!(is_utc_timestamp(session["created_at"].as_str().unwrap()));
    assert_eq!(session["history"].as_array().unwrap().len(), 1);
    assert_eq!(session["active_space"], "lda");
}

#[tokio::test]
async fn error_codes() {
    let app = app();
    let id = new_session(&app).await;
    let q = format!("/sessions/{id}/query");

    let (status, err) = call(&app, "POST", &q, Some(json!({"seeds": ["n0000"], "space": "doc2vec"}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("space_not_found")));
    assert!(err["message"].as_str().unwrap().contains("doc2vec"));

    let (status, err) = call(&app, "POST", &q, Some(json!({"seeds": ["n0000"], "k": 0}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_k")));

    let (status, err) = call(&app, "POST", &q, Some(json!({"seeds": ["ghost"]}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("account_not_found")));

    let (status, err) = raw(&app, "POST", &q, Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(err.contains("invalid_body"));

    let (status, err) = call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": "n0001", "state": "evil"}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_body")));

    let (status, err) = call(&app, "GET", "/sessions/missing", None).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("session_not_found")));

    let (status, err) = call(&app, "POST", "/sessions", Some(json!({"dataset": "elsewhere"}))).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::NOT_FOUND, Some("dataset_not_found")));

    // Failed calls leave no trace in the history.
    let (_, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert!(session["history"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn reseeding_from_a_hit_links_parent_and_child() {
    let app = app();
    let id = new_session(&app).await;
    let q = format!("/sessions/{id}/query");
    let (_, first) = call(&app, "POST", &q, Some(json!({"seeds": ["n0000"], "k": 5}))).await;
    let hit = first["result"]["hits"][2]["id"].as_str().unwrap().to_string();
    call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": hit, "state": "suspicious"}))).await;

    let (_, second) = call(&app, "POST", &q, Some(json!({"seeds": [hit], "k": 5, "space": "jaccard"}))).await;
    assert_eq!(second["query_id"], "q2");
    assert_eq!(second["parent"], "q1");
    assert_eq!(second["result"]["score_kind"], "similarity");

    // Omitting the space reuses the active one; the parent is still the
    // query that surfaced the seed.
    let (_, third) = call(&app, "POST", &q, Some(json!({"seeds": [hit], "k": 3}))).await;
    assert_eq!(third["parent"], "q1");
    let (_, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    let history = session["history"].as_array().unwrap();
    assert_eq!(history[1]["parent"], "q1");
    assert_eq!(history[1]["seeds"], json!([hit]));
    assert_eq!(history[2]["parent"], "q1");
    assert_eq!(history[2]["space"], "jaccard");
}

#[tokio::test]
async fn retried_mutations_are_idempotent() {
    let app = app();
    let create = json!({"dataset": "planted", "space": "lda", "request_id": "create-1"});
    let (_, a) = call(&app, "POST", "/sessions", Some(create.clone())).await;
    let (_, b) = call(&app, "POST", "/sessions", Some(create)).await;
    assert_eq!(a["session_id"], b["session_id"]);
    let id = a["session_id"].as_str().unwrap();

    let q = json!({"seeds": ["n0003"], "k": 4, "request_id": "q-1"});
    let (_, r1) = call(&app, "POST", &format!("/sessions/{id}/query"), Some(q.clone())).await;
    let (_, r2) = call(&app, "POST", &format!("/sessions/{id}/query"), Some(q)).await;
    assert_eq!(r1, r2);

    let f = json!({"account_id": "n0004", "state": "benign", "request_id": "f-1"});
    let (_, f1) = call(&app, "POST", &format!("/sessions/{id}/flags"), Some(f.clone())).await;
    let (_, f2) = call(&app, "POST", &format!("/sessions/{id}/flags"), Some(f)).await;
    assert_eq!(f1, f2);

    let (_, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(session["history"].as_array().unwrap().len(), 1);
    assert_eq!(session["flags"].as_object().unwrap().len(), 1);
}

#[tokio::test]
async fn export_import_export_is_byte_identical() {
    let app = app();
    let id = new_session(&app).await;
    call(&app, "POST", &format!("/sessions/{id}/query"), Some(json!({"seeds": ["n0000", "n0001"], "k": 6, "aggregation": "min_dist"}))).await;
    call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": "n0002", "state": "unknown"}))).await;
    let (status, exported) = raw(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);

    let other = self::app();
    let (status, _) = raw(&other, "POST", "/sessions/import", Some(exported.clone())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, again) = raw(&other, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(exported, again);

    let mut broken: Value = serde_json::from_str(&exported).unwrap();
    broken["history"][0]["parent"] = json!("q7");
    let (status, err) = call(&other, "POST", "/sessions/import", Some(broken)).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_body")));
}

#[tokio::test]
async fn sessions_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(SessionStore::open(dir.path()).unwrap());
    let id = new_session(&app).await;
    call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": "n0010", "state": "suspicious"}))).await;
    let (_, before) = raw(&app, "GET", &format!("/sessions/{id}/export"), None).await;

    let restarted = app_with(SessionStore::open(dir.path()).unwrap());
    let (status, after) = raw(&restarted, "GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(before, after);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_flags_on_one_session_all_land() {
    let app = app();
    let id = new_session(&app).await;
    let tasks: Vec<_> = (0..20)
        .map(|i| {
            let app = app.clone();
            let uri = format!("/sessions/{id}/flags");
            tokio::spawn(async move {
                call(&app, "POST", &uri, Some(json!({"account_id": format!("n{i:04}"), "state": "suspicious"}))).await.0
            })
        })
        .collect();
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let (_, session) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(session["flags"].as_object().unwrap().len(), 20);
}

#[tokio::test]
async fn projection_and_account_cards() {
    let app = app();
    let (status, proj) = call(&app, "GET", "/datasets/planted/projection?space=lda&method=pca", None).await;
    assert_eq!(status, StatusCode::OK);
    let points = proj["points"].as_array().unwrap();
    assert_eq!(points.len(), 60);
    assert!(points.iter().all(|p| p["x"].is_f64() && p["y"].is_f64()));
    assert_eq!(points[0]["label"], true);

    let (status, tsne) = call(&app, "GET", "/datasets/planted/projection?space=lda&method=tsne&perplexity=5&seed=2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(tsne["points"].as_array().unwrap().len(), 60);

    let (status, err) = call(&app, "GET", "/datasets/planted/projection?space=sybilrank", None).await;
    assert_eq!((status, err["code"].as_str()), (StatusCode::BAD_REQUEST, Some("projection_unavailable")));

    let (status, card) = call(&app, "GET", "/datasets/planted/accounts/n0001", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(card["id"], "n0001");
    assert_eq!(card["label"], true);
    assert!(card["out_degree"].as_u64().unwrap() > 0);
    let (status, _) = call(&app, "GET", "/datasets/planted/accounts/zzz", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}
