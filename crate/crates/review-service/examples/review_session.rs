//! Drives the review HTTP API in-process: list, inspect, correct, approve, export.

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use organdet::dataset::synthetic::{synthetic_manifest, SplitTable};
use organdet::review::ReviewStore;
use organdet_review::{router, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (u16, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json");
    let body = body.map_or_else(Body::empty, |v| Body::from(v.to_string()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status().as_u16();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() {
    let table = SplitTable {
        rows: [
            ("Leaf", 6, 2),
            ("Flower", 2, 1),
            ("Fruit", 1, 0),
            ("Seed", 0, 0),
            ("Stem", 3, 1),
            ("Root", 0, 1),
        ],
        train_images: 3,
        test_images: 1,
    };
    let app = router(ReviewStore::new(synthetic_manifest(&table, 7)).unwrap(), ServiceConfig::default());

    let (_, page) = call(&app, "GET", "/images?status=unverified", None).await;
    println!("{} images awaiting review", page["total"]);

    let id = page["images"][0]["image_id"].as_str().unwrap().to_owned();
    let (_, img) = call(&app, "GET", &format!("/images/{id}"), None).await;
    let first = &img["boxes"][0];
    println!("{id}: first box {} {}", first["category"], first["box"]);

    let relabel = json!({
        "action": "relabel",
        "index": 0,
        "reviewer": "curator",
        "idempotency_key": "fix-1",
        "before": { "box": first["box"], "category": first["category"] },
        "after": { "box": first["box"], "category": "Stem" }
    });
    let uri = format!("/images/{id}/corrections");
    let (code, out) = call(&app, "POST", &uri, Some(relabel.clone())).await;
    println!("relabel -> {code} {}", out["status"]);
    let (code, out) = call(&app, "POST", &uri, Some(relabel)).await;
    println!("same key again -> {code} duplicate={}", out["duplicate"]);

    let other = page["images"][1]["image_id"].as_str().unwrap();
    let (code, out) = call(&app, "POST", &format!("/images/{other}/approve"), None).await;
    println!("approve {other} -> {code} {}", out["status"]);

    let (_, stats) = call(&app, "GET", "/stats", None).await;
    println!(
        "unverified {}, verified {}, corrected {}, events {}",
        stats["unverified"], stats["verified"], stats["corrected"], stats["events"]
    );
    let (_, export) = call(&app, "GET", "/export", None).await;
    println!("exported {} reviewed images", export["images"].as_array().unwrap().len());
}
