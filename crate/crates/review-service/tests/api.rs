use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use organdet::dataset::{compute_stats, AnnotatedBox, AnnotatedImage, DatasetManifest, Provenance};
use organdet::geometry::BoundingBox;
use organdet::review::ReviewStore;
use organdet_review::{router, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

fn manifest() -> DatasetManifest {
    let mut m = DatasetManifest::default();
    for (id, cats) in [("sheet_a", ["Leaf", "Stem"]), ("sheet_b", ["Leaf", "Root"])] {
        let mut img = AnnotatedImage::new(id, format!("{id}.jpg"), 1200, 800);
        img.provenance = Provenance::Predicted;
        img.boxes.push(AnnotatedBox::predicted(bb(10.0, 10.0, 50.0, 50.0), cats[0], 0.91));
        img.boxes.push(AnnotatedBox::predicted(bb(100.0, 100.0, 300.0, 200.0), cats[1], 0.62));
        m.images.push(img);
    }
    m
}

fn app_with(config: ServiceConfig) -> Router {
    router(ReviewStore::new(manifest()).unwrap(), config)
}

fn app() -> Router {
    app_with(ServiceConfig::default())
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

fn move_body(x0: f64) -> Value {
    json!({
        "action": "move",
        "index": 0,
        "reviewer": "expert",
        "before": { "box": [10.0, 10.0, 50.0, 50.0], "category": "Leaf" },
        "after": { "box": [x0, 10.0, 50.0, 50.0], "category": "Leaf" }
    })
}

#[tokio::test]
async fn health_and_categories() {
    let app = app();
    let (s, v) = call(&app, "GET", "/health", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "ok");
    let (_, v) = call(&app, "GET", "/categories", None).await;
    let colors: Vec<(&str, &str)> = v["categories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| (c["name"].as_str().unwrap(), c["color"]["name"].as_str().unwrap()))
        .collect();
    assert_eq!(
        colors,
        [
            ("Leaf", "blue"),
            ("Flower", "maroon"),
            ("Fruit", "magenta"),
            ("Seed", "yellow"),
            ("Stem", "green"),
            ("Root", "gray")
        ]
    );
}

#[tokio::test]
async fn image_payload() {
    let app = app();
    let (s, v) = call(&app, "GET", "/images/sheet_a", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "unverified");
    assert_eq!(v["provenance"], "predicted");
    assert_eq!(v["boxes"][1]["category"], "Stem");
    assert_eq!(v["boxes"][1]["color"]["name"], "green");
    assert_eq!(v["boxes"][0]["score"], 0.91);
    let (s, v) = call(&app, "GET", "/images/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "not_found");
}

#[tokio::test]
async fn listing_filters() {
    let app = app();
    let (_, v) = call(&app, "GET", "/images", None).await;
    assert_eq!(v["total"], 2);
    assert_eq!(v["images"][0]["image_id"], "sheet_a");
    assert_eq!(v["images"][1]["boxes_by_category"]["Root"], 1);

    let (s, _) = call(&app, "POST", "/images/sheet_a/approve", None).await;
    assert_eq!(s, StatusCode::CREATED);
    let empty_json = Request::post("/images/sheet_a/approve")
        .header("content-type", "application/json")
        .body(Body::empty())
        .unwrap();
    assert_eq!(app.clone().oneshot(empty_json).await.unwrap().status(), StatusCode::CREATED);
    let (_, v) = call(&app, "GET", "/images?status=unverified", None).await;
    assert_eq!(v["total"], 1);
    assert_eq!(v["images"][0]["image_id"], "sheet_b");
    let (_, v) = call(&app, "GET", "/images?category=Root", None).await;
    assert_eq!(v["images"].as_array().unwrap().len(), 1);
    let (_, v) = call(&app, "GET", "/images?page=2&page_size=1", None).await;
    assert_eq!(v["images"][0]["image_id"], "sheet_b");
    let (s, _) = call(&app, "GET", "/images?status=bogus", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn correction_flow_and_export() {
    let app = app();
    let (_, v) = call(&app, "GET", "/export", None).await;
    assert_eq!(v["images"].as_array().unwrap().len(), 0);

    let (s, v) = call(&app, "POST", "/images/sheet_a/corrections", Some(move_body(12.0))).await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["status"], "corrected");
    assert_eq!(v["event"]["after"]["box"], json!([12.0, 10.0, 50.0, 50.0]));
    assert_eq!(v["annotations"]["boxes"][0]["box"], json!([12.0, 10.0, 50.0, 50.0]));

    let (s, v) = call(&app, "POST", "/images/sheet_a/corrections", Some(move_body(14.0))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "conflict");

    let outside = json!({ "action": "add", "after": { "box": [1100, 700, 1300, 790], "category": "Leaf" } });
    let (s, v) = call(&app, "POST", "/images/sheet_a/corrections", Some(outside)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "invalid_box");

    let (s, _) = call(&app, "POST", "/images/ghost/corrections", Some(move_body(12.0))).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    call(&app, "POST", "/images/sheet_b/approve", Some(json!({ "reviewer": "expert" }))).await;
    let (s, v) = call(&app, "POST", "/images/sheet_b/approve", Some(json!({ "reviewer": 5 }))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "malformed");

    let (s, v) = call(&app, "GET", "/export", None).await;
    assert_eq!(s, StatusCode::OK);
    let exported = DatasetManifest::from_json(&v.to_string()).unwrap();
    assert_eq!(exported.images.len(), 2);
    assert_eq!(exported.images[0].provenance, Provenance::Corrected);
    assert_eq!(exported.images[1].provenance, Provenance::Verified);

    let (_, v) = call(&app, "GET", "/export?status=corrected", None).await;
    assert_eq!(v["images"].as_array().unwrap().len(), 1);
    let (s, _) = call(&app, "GET", "/export?status=maybe", None).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);

    let (_, st) = call(&app, "GET", "/stats", None).await;
    assert_eq!(st["corrected"], 1);
    assert_eq!(st["verified"], 1);
    assert_eq!(st["events"], 2);
    let local = compute_stats(&exported);
    assert_eq!(st["boxes"]["totals"]["total"], local.totals.total);
}

#[tokio::test]
async fn idempotent_resubmission() {
    let app = app();
    let mut body = move_body(12.0);
    body["idempotency_key"] = json!("req-1");
    let (s, first) = call(&app, "POST", "/images/sheet_b/corrections", Some(body.clone())).await;
    assert_eq!(s, StatusCode::CREATED);
    let (s, again) = call(&app, "POST", "/images/sheet_b/corrections", Some(body)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(again["duplicate"], true);
    assert_eq!(again["event"], first["event"]);
    let (_, st) = call(&app, "GET", "/stats", None).await;
    assert_eq!(st["events"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_conflicting_moves() {
    for _ in 0..20 {
        let app = app();
        let a = tokio::spawn({
            let app = app.clone();
            async move { call(&app, "POST", "/images/sheet_a/corrections", Some(move_body(12.0))).await.0 }
        });
        let b = tokio::spawn({
            let app = app.clone();
            async move { call(&app, "POST", "/images/sheet_a/corrections", Some(move_body(20.0))).await.0 }
        });
        let mut codes = [a.await.unwrap(), b.await.unwrap()];
        codes.sort();
        assert_eq!(codes, [StatusCode::CREATED, StatusCode::CONFLICT]);
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_reads_are_consistent() {
    let app = app();
    let writer = tokio::spawn({
        let app = app.clone();
        async move {
            for i in 0..30 {
                let add = json!({ "action": "add", "after": { "box": [i, 0, i + 5, 5], "category": "Seed" } });
                call(&app, "POST", "/images/sheet_b/corrections", Some(add)).await;
            }
        }
    });
    let mut readers = Vec::new();
    for _ in 0..4 {
        let app = app.clone();
        readers.push(tokio::spawn(async move {
            for _ in 0..30 {
                let (_, st) = call(&app, "GET", "/stats", None).await;
                // one added box per applied event, never a torn state
                assert_eq!(st["boxes"]["totals"]["total"].as_u64().unwrap(), 4 + st["events"].as_u64().unwrap());
            }
        }));
    }
    writer.await.unwrap();
    for r in readers {
        r.await.unwrap();
    }
    let (_, v) = call(&app, "GET", "/images/sheet_b", None).await;
    assert_eq!(v["boxes"].as_array().unwrap().len(), 32);
}

#[tokio::test]
async fn image_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("sheet_a.jpg"), b"\xFF\xD8jpeg").unwrap();
    let app = app_with(ServiceConfig {
        images_root: Some(dir.path().to_owned()),
        ui_dir: None,
    });
    let resp = app
        .clone()
        .oneshot(Request::get("/images/sheet_a/file").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "image/jpeg");
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    assert_eq!(&bytes[..], b"\xFF\xD8jpeg");
    let (s, _) = call(&app, "GET", "/images/sheet_b/file", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let mut m = manifest();
    m.images[0].file_name = "../secret.jpg".into();
    let app = router(
        ReviewStore::new(m).unwrap(),
        ServiceConfig {
            images_root: Some(dir.path().to_owned()),
            ui_dir: None,
        },
    );
    let (s, _) = call(&app, "GET", "/images/sheet_a/file", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn static_ui_fallback() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<html>review</html>").unwrap();
    let app = app_with(ServiceConfig {
        images_root: None,
        ui_dir: Some(dir.path().to_owned()),
    });
    let resp = app
        .oneshot(Request::get("/index.html").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}
