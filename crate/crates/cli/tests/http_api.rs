//! Annotation API driven through the router, plus export of what it stored.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{fixture_posts, swb, CORPUS};
use swb_cli::server::{build_router, AppState};
use swb_core::annotation::{LabelStore, TrainingLabel};
use swb_core::corpus::{read_jsonl, write_jsonl, CorpusLayout, Post};
use swb_core::Dimension;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn three_posts() -> Vec<Post> {
    let (posts, _) = fixture_posts(3, 1, 1);
    posts
}

fn app_with(posts: &BTreeMap<Dimension, Vec<Post>>, labels: Option<std::path::PathBuf>) -> Router {
    build_router(Arc::new(AppState::new(posts, LabelStore::default(), labels, 0)))
}

#[tokio::test]
async fn coding_session_round_trip_exports_what_was_submitted() {
    let dir = tempfile::tempdir().unwrap();
    // a real corpus so the CLI export runs against the same store
    let input = dir.path().join("posts.jsonl");
    let posts = three_posts();
    write_jsonl(&input, &posts).unwrap();
    let data = dir.path().join("data");
    fs::create_dir_all(&data).unwrap();
    assert_eq!(swb(&data, &["--corpus", CORPUS, "ingest", "--input", input.to_str().unwrap()]).status, 0);
    let layout = CorpusLayout::new(&data, CORPUS);
    // candidate pools overlap; the session shows each post once
    write_jsonl(&layout.candidates_path(Dimension::Emo), &posts).unwrap();
    write_jsonl(&layout.candidates_path(Dimension::Vit), &posts[..2]).unwrap();

    let config = swb_cli::RunConfig::new(Some(data.clone()), Some(CORPUS.into()));
    let app = build_router(Arc::new(AppState::load(&config).unwrap()));

    let (status, opened) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c1", "dimension_pool": "all", "seed": 9}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(opened["remaining"], 3);
    let sid = opened["session_id"].as_str().unwrap().to_string();
    let next = format!("/api/sessions/{sid}/next");
    let submit = format!("/api/sessions/{sid}/labels");

    let (_, first) = call(&app, "GET", &next, None).await;
    assert_eq!(first["remaining"], 3);
    assert_eq!(first["done"], false);
    let a = first["post_id"].as_str().unwrap().to_string();
    let text = posts.iter().find(|p| p.id == a).unwrap().text.clone();
    assert_eq!(first["text"], text);
    assert!(first.get("dimension").is_none() && first.get("keyword").is_none());

    let labels = json!({"emo": "positive", "res": "positive", "vit": "negative"});
    let (status, ack) = call(&app, "POST", &submit, Some(json!({"post_id": a, "labels": labels}))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack, json!({"ok": true, "cursor": 1}));

    // resubmitting the old post is stale; the client recovers via /next
    let (status, err) = call(&app, "POST", &submit, Some(json!({"post_id": a, "labels": {"emo": "negative"}}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "stale_cursor");

    let (_, second) = call(&app, "GET", &next, None).await;
    let b = second["post_id"].as_str().unwrap().to_string();
    assert_ne!(a, b);
    assert_eq!(second["remaining"], 2);
    let (_, ack) = call(&app, "POST", &submit, Some(json!({"post_id": b, "labels": {}}))).await;
    assert_eq!(ack["cursor"], 2);

    let (_, third) = call(&app, "GET", &next, None).await;
    let c = third["post_id"].as_str().unwrap().to_string();
    let (_, ack) = call(&app, "POST", &submit, Some(json!({"post_id": c, "all_offtopic": true}))).await;
    assert_eq!(ack["cursor"], 3);

    let (_, done) = call(&app, "GET", &next, None).await;
    assert_eq!(done["done"], true);
    assert_eq!(done["remaining"], 0);

    let (_, progress) = call(&app, "GET", "/api/progress", None).await;
    assert_eq!(progress["emo"], 2);
    assert_eq!(progress["vit"], 2);
    assert_eq!(progress["sat"], 1);

    let run = swb(&data, &["--corpus", CORPUS, "export-labels"]);
    assert_eq!(run.status, 0, "{}", run.stderr);
    let exported: Vec<TrainingLabel> = read_jsonl(&layout.root().join("training.jsonl")).unwrap();
    let got: Vec<(String, String, String)> = exported
        .iter()
        .map(|t| (t.post_id.clone(), t.dimension.to_string(), t.label.to_string()))
        .collect();
    let mut want = vec![
        (a.clone(), "emo".to_string(), "positive".to_string()),
        (a.clone(), "res".to_string(), "positive".to_string()),
        (a.clone(), "vit".to_string(), "negative".to_string()),
    ];
    for d in Dimension::ALL {
        want.push((c.clone(), d.to_string(), "offtopic".to_string()));
    }
    let mut got_sorted = got.clone();
    got_sorted.sort();
    want.sort();
    assert_eq!(got_sorted, want);
    assert!(got.iter().all(|(p, _, _)| *p != b), "skipped post must not be exported");

    // every post got a record from c1 (the skip included), so a new session
    // for c1 is empty while another coder sees the whole pool
    let (_, again) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c1", "dimension_pool": ["emo"], "seed": 1}))).await;
    assert_eq!(again["remaining"], 0);
    let (_, other) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c2", "dimension_pool": ["emo"], "seed": 1}))).await;
    assert_eq!(other["remaining"], 3);
}

#[tokio::test]
async fn errors_carry_a_code_and_message() {
    let mut pools = BTreeMap::new();
    pools.insert(Dimension::Emo, three_posts());
    let app = app_with(&pools, None);

    let (status, err) = call(&app, "GET", "/api/sessions/none/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(err["error"], "unknown_session");
    assert!(err["message"].as_str().unwrap().contains("none"));

    let (status, err) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c", "dimension_pool": "xyz"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "unknown_dimension");

    let (status, err) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c", "dimension_pool": "sat"}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(err["error"], "nothing_to_annotate");

    let (status, err) = call(&app, "POST", "/api/sessions", Some(json!({"dimension_pool": "all"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "bad_request");

    let (_, opened) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c", "dimension_pool": "emo"}))).await;
    let sid = opened["session_id"].as_str().unwrap();
    let (_, next) = call(&app, "GET", &format!("/api/sessions/{sid}/next"), None).await;
    let post = next["post_id"].as_str().unwrap();
    let submit = format!("/api/sessions/{sid}/labels");

    let (status, err) = call(&app, "POST", &submit, Some(json!({"post_id": post, "labels": {"emo": "great"}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "unknown_label");
    let (status, err) = call(&app, "POST", &submit, Some(json!({"post_id": post, "labels": {"joy": "positive"}}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "unknown_dimension");
    let (status, err) = call(
        &app,
        "POST",
        &submit,
        Some(json!({"post_id": post, "all_offtopic": true, "labels": {"emo": "positive"}})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(err["error"], "bad_request");

    let req = Request::builder()
        .method("POST")
        .uri(&submit)
        .body(Body::from("{not json"))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    // rejected submissions leave the cursor in place
    let (_, still) = call(&app, "GET", &format!("/api/sessions/{sid}/next"), None).await;
    assert_eq!(still["post_id"], post);
    assert_eq!(still["remaining"], 3);
}

#[tokio::test]
async fn sessions_are_seeded_shuffles() {
    let (posts, _) = fixture_posts(30, 1, 2);
    let mut pools = BTreeMap::new();
    pools.insert(Dimension::Fun, posts);
    let order = |seed: u64| {
        let app = app_with(&pools, None);
        async move {
            let (_, opened) = call(&app, "POST", "/api/sessions", Some(json!({"coder_id": "c", "dimension_pool": "fun", "seed": seed}))).await;
            let sid = opened["session_id"].as_str().unwrap().to_string();
            let mut ids = Vec::new();
            loop {
                let (_, next) = call(&app, "GET", &format!("/api/sessions/{sid}/next"), None).await;
                let Some(id) = next["post_id"].as_str().map(str::to_string) else { break };
                call(&app, "POST", &format!("/api/sessions/{sid}/labels"), Some(json!({"post_id": id, "labels": {}}))).await;
                ids.push(id);
            }
            ids
        }
    };
    let a = order(4).await;
    assert_eq!(a.len(), 30);
    assert_eq!(a, order(4).await);
    assert_ne!(a, order(5).await);
}
