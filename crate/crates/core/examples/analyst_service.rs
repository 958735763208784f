//! The HTTP service the analyst console talks to. Builds a small dataset in
//! memory, walks through a session (create, query, flag, export) with
//! in-process requests, then optionally keeps serving.
//!
//! cargo run --example analyst_service [-- --listen 127.0.0.1:8080]

use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::Request;
use axum::Router;
use botmatch::dataset::Dataset;
use botmatch::eval::{gen_planted_graph, gen_posts, gen_topic_corpus};
use botmatch::ingest::{assemble_dataset, build_edges};
use botmatch::service::{router, AppState, SessionStore};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req.body(body.map_or_else(Body::empty, |b| Body::from(b.to_string()))).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    println!("{method} {uri} -> {status}");
    value
}

#[tokio::main]
async fn main() -> botmatch::Result<()> {
    let planted = gen_planted_graph(&[30, 30], 0.2, 0.01, 5)?;
    let docs = gen_topic_corpus(&planted.blocks, 30, 80, 0.2, 5)?;
    let posts = gen_posts(&planted, &docs, 20, 5)?;
    let (accounts, edges) = assemble_dataset(&posts, &build_edges(&posts), false)?;
    let ds = Dataset::from_parts("demo", "demo", accounts, &edges, Some(planted.labels))?;

    let app = router(Arc::new(AppState::new(vec![ds], SessionStore::in_memory(), None)));
    let spaces = call(&app, "GET", "/datasets/demo/spaces", None).await;
    println!("  spaces: {}", spaces.as_array().map_or(0, Vec::len));

    let session = call(&app, "POST", "/sessions", Some(json!({"dataset": "demo", "space": "jaccard"}))).await;
    let id = session["session_id"].as_str().unwrap_or_default().to_string();
    let reply = call(&app, "POST", &format!("/sessions/{id}/query"), Some(json!({"seeds": ["n0000"], "k": 5}))).await;
    let top = reply["hits"][0]["id"].as_str().unwrap_or("n0001").to_string();
    println!("  top hit {top}");
    call(&app, "POST", &format!("/sessions/{id}/flags"), Some(json!({"account_id": top, "state": "suspicious"}))).await;
    let card = call(&app, "GET", &format!("/datasets/demo/accounts/{top}"), None).await;
    println!("  card: {card}");
    let export = call(&app, "GET", &format!("/sessions/{id}/export"), None).await;
    let queries = export["history"].as_array().map_or(0, Vec::len);
    let flags = export["flags"].as_object().map_or(0, |f| f.len());
    println!("  exported {queries} queries, {flags} flags");

    let mut args = std::env::args().skip(1);
    if args.next().as_deref() == Some("--listen") {
        let addr = args.next().unwrap_or_else(|| "127.0.0.1:8080".into());
        let listener = tokio::net::TcpListener::bind(&addr).await?;
        println!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app).await?;
    }
    Ok(())
}
