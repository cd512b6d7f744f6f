use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use organdet::dataset::{write_voc_xml, AnnotatedBox, AnnotatedImage, CocoDocument, DatasetManifest, Provenance};
use organdet::eval::EvalReport;
use organdet::geometry::BoundingBox;

fn organdet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_organdet"))
        .args(args)
        .output()
        .expect("running organdet")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bb(x0: f64, y0: f64, x1: f64, y1: f64) -> BoundingBox {
    BoundingBox::new(x0, y0, x1, y1).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn ground_truth() -> DatasetManifest {
    let mut m = DatasetManifest::default();
    let mut img = AnnotatedImage::new("x", "x.jpg", 100, 100);
    img.boxes.push(AnnotatedBox::new(bb(0.0, 0.0, 10.0, 10.0), "Leaf"));
    img.boxes.push(AnnotatedBox::new(bb(20.0, 20.0, 30.0, 30.0), "Leaf"));
    m.images.push(img);
    m
}

/// Ranked [TP, FP, TP] over two Leaf boxes.
fn crafted_predictions() -> DatasetManifest {
    let mut m = DatasetManifest::default();
    let mut img = AnnotatedImage::new("x", "x.jpg", 100, 100);
    img.provenance = Provenance::Predicted;
    img.boxes.push(AnnotatedBox::predicted(bb(0.0, 0.0, 10.0, 10.0), "Leaf", 0.9));
    img.boxes.push(AnnotatedBox::predicted(bb(50.0, 50.0, 60.0, 60.0), "Leaf", 0.8));
    img.boxes.push(AnnotatedBox::predicted(bb(20.0, 20.0, 30.0, 30.0), "Leaf", 0.7));
    m.images.push(img);
    m
}

fn voc_files(dir: &Path, n: usize) {
    for i in 0..n {
        let mut img = AnnotatedImage::new(format!("sheet{i}"), format!("sheet{i}.jpg"), 1200, 800);
        img.boxes.push(AnnotatedBox::new(bb(10.0, 20.0, 110.0, 220.0), "Leaf"));
        img.boxes.push(AnnotatedBox::new(bb(300.0, 20.0, 310.0, 500.0), "Stem"));
        write(dir, &format!("sheet{i}.xml"), &write_voc_xml(&img));
    }
}

#[test]
fn convert_xml_directory_to_manifest_and_coco() {
    let dir = tempfile::tempdir().unwrap();
    let xml = dir.path().join("xml");
    std::fs::create_dir(&xml).unwrap();
    voc_files(&xml, 3);
    let manifest = dir.path().join("m.json");
    let o = organdet(&["convert", p(&xml), "--to", "manifest", "-o", p(&manifest)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("3 images, 6 boxes"));
    let m = DatasetManifest::load(&manifest).unwrap();
    assert_eq!(m.images.len(), 3);

    let coco = dir.path().join("c.json");
    let o = organdet(&["convert", p(&manifest), "--to", "coco", "-o", p(&coco)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = CocoDocument::from_json(&std::fs::read_to_string(&coco).unwrap()).unwrap();
    assert_eq!((doc.images.len(), doc.annotations.len(), doc.categories.len()), (3, 6, 6));

    let back = dir.path().join("voc");
    let o = organdet(&["convert", p(&coco), "--to", "voc-xml", "-o", p(&back)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(back.join("Annotations").join("sheet2.xml").is_file());
}

#[test]
fn convert_reports_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    voc_files(dir.path(), 2);
    write(dir.path(), "broken.xml", "<annotation><size><width>12");
    let o = organdet(&["convert", p(dir.path())]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("broken.xml"), "{}", stderr(&o));
}

#[test]
fn convert_unknown_label() {
    let dir = tempfile::tempdir().unwrap();
    let mut img = AnnotatedImage::new("s", "s.jpg", 100, 100);
    img.boxes.push(AnnotatedBox::new(bb(1.0, 1.0, 5.0, 5.0), "Leaf"));
    let xml = write_voc_xml(&img).replace("Leaf", "Blatt");
    let file = write(dir.path(), "s.xml", &xml);
    let o = organdet(&["convert", p(&file)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("Blatt"));
    let o = organdet(&["convert", p(&file), "--allow-new-categories"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = DatasetManifest::from_json(&stdout(&o)).unwrap();
    assert_eq!(m.vocabulary.len(), 7);
}

#[test]
fn stats_of_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "m.json", &DatasetManifest::default().to_json());
    let json = dir.path().join("s.json");
    let o = organdet(&["stats", p(&file), "--json", p(&json)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("| Total    | 0"));
    assert!(out.contains("Mean bounding boxes per image: 0.0"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["totals"]["total"], 0);
}

#[test]
fn evaluate_self_crafted_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let gt = write(dir.path(), "gt.json", &ground_truth().to_json());

    let mut perfect = ground_truth();
    perfect.images[0].provenance = Provenance::Predicted;
    for b in &mut perfect.images[0].boxes {
        b.score = Some(1.0);
    }
    let pred = write(dir.path(), "perfect.json", &perfect.to_json());
    let o = organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_owned).collect();
    assert_eq!(lines[2], "| 1.00              | 100.0       | 100.0 | 100.0 |");

    let pred = write(dir.path(), "crafted.json", &crafted_predictions().to_json());
    let json = dir.path().join("report.json");
    let o = organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred), "--json", p(&json)]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().nth(2).unwrap().starts_with("| 0.83 "));
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!((report.ap50_voc - 5.0 / 6.0).abs() < 1e-4);

    let mut empty = ground_truth();
    empty.images[0].boxes.clear();
    let pred = write(dir.path(), "empty.json", &empty.to_json());
    let o = organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().nth(2).unwrap().starts_with("| 0.00 "));
    for organ in ["Leaf", "Flower", "Fruit", "Seed", "Stem", "Root"] {
        assert!(out.contains(&format!("| {organ}")));
    }

    let mut alien = crafted_predictions();
    alien.vocabulary.push("Bud").unwrap();
    alien.images[0].boxes[0].category = "Bud".into();
    let pred = write(dir.path(), "alien.json", &alien.to_json());
    let o = organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred)]);
    assert!(!o.status.success());
}

#[test]
fn evaluate_methods() {
    let dir = tempfile::tempdir().unwrap();
    let gt = write(dir.path(), "gt.json", &ground_truth().to_json());
    let pred = write(dir.path(), "pred.json", &crafted_predictions().to_json());
    let voc = stdout(&organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred), "--method", "voc"]));
    assert!(voc.starts_with("| AP50 (Pascal VOC) |\n"));
    let coco = stdout(&organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred), "--method", "coco"]));
    assert!(coco.starts_with("| AP50 (COCO) | AP75 "));
    let o = organdet(&["evaluate", "--gt", p(&gt), "--predictions", p(&pred), "--score-threshold", "1.5"]);
    assert!(!o.status.success());
}

#[test]
fn nms_and_filter_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = DatasetManifest::default();
    let mut img = AnnotatedImage::new("x", "x.jpg", 100, 100);
    img.provenance = Provenance::Predicted;
    img.boxes.push(AnnotatedBox::predicted(bb(0.0, 0.0, 10.0, 10.0), "Leaf", 0.9));
    img.boxes.push(AnnotatedBox::predicted(bb(1.0, 1.0, 11.0, 11.0), "Stem", 0.8));
    img.boxes.push(AnnotatedBox::predicted(bb(50.0, 50.0, 60.0, 60.0), "Leaf", 0.3));
    m.images.push(img);
    let input = write(dir.path(), "pred.json", &m.to_json());

    let out = dir.path().join("nms.json");
    let o = organdet(&["nms", p(&input), "-o", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("kept 2 boxes, suppressed 1"));
    assert_eq!(DatasetManifest::load(&out).unwrap().box_count(), 2);

    let o = organdet(&["nms", p(&input), "--per-category", "-o", p(&out)]);
    assert!(stderr(&o).contains("kept 3 boxes, suppressed 0"));

    let coco_in = dir.path().join("pred_coco.json");
    organdet(&["convert", p(&input), "--to", "coco", "-o", p(&coco_in)]);
    let coco_out = dir.path().join("nms_coco.json");
    let o = organdet(&["nms", p(&coco_in), "-o", p(&coco_out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = CocoDocument::from_json(&std::fs::read_to_string(coco_out).unwrap()).unwrap();
    assert_eq!(doc.annotations.len(), 2);

    let o = organdet(&["filter", p(&input), "-o", p(&out)]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("kept 2 of 3 boxes"));
}

#[test]
fn rescale_command() {
    let dir = tempfile::tempdir().unwrap();
    let mut m = DatasetManifest::default();
    let mut img = AnnotatedImage::new("scan", "scan.jpg", 5100, 3500);
    img.boxes.push(AnnotatedBox::new(bb(0.0, 0.0, 5100.0, 3500.0), "Leaf"));
    m.images.push(img);
    let input = write(dir.path(), "m.json", &m.to_json());
    let out = dir.path().join("r.json");
    let o = organdet(&["rescale", p(&input), "-o", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = DatasetManifest::load(&out).unwrap();
    assert_eq!((r.images[0].width, r.images[0].height), (1165, 800));
    assert_eq!(r.images[0].boxes[0].bbox, bb(0.0, 0.0, 1165.0, 800.0));
}

#[test]
fn anchors_listing() {
    let o = organdet(&["anchors"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("0\t32\t0.5\t2.000\t2.000\t22.627\t45.255"));
    assert!(out.ends_with("18 anchors (3 + 3 + 3 + 3 + 3 + 3 per level)\n"));
    let o = organdet(&["anchors", "--grid", "2x3", "--summary"]);
    assert!(stdout(&o).starts_with("108 anchors"));
    let o = organdet(&["anchors", "--strides", "8,4,16,32,64,128"]);
    assert!(!o.status.success());
}

#[test]
fn serve_missing_manifest_fails() {
    let o = organdet(&["serve", "--manifest", "/definitely/not/here.json", "--port", "0"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("here.json"));
}

fn http_get(addr: &str, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(addr).ok()?;
    s.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n").ok()?;
    let mut buf = String::new();
    s.read_to_string(&mut buf).ok()?;
    Some(buf)
}

#[cfg(unix)]
#[test]
fn serve_health_and_graceful_stop() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write(dir.path(), "m.json", &crafted_predictions().to_json());
    let mut child = Command::new(env!("CARGO_BIN_EXE_organdet"))
        .args(["serve", "--manifest", p(&manifest), "--port", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server exited early").unwrap();
        if let Some(a) = line.strip_prefix("review service listening on http://") {
            break a.to_owned();
        }
    };
    let deadline = Instant::now() + Duration::from_secs(10);
    let health = loop {
        if let Some(r) = http_get(&addr, "/health") {
            break r;
        }
        assert!(Instant::now() < deadline, "service never answered");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(health.starts_with("HTTP/1.1 200"));
    assert!(health.contains("\"status\":\"ok\""));

    let polls: Vec<String> = (0..8)
        .map(|_| {
            let addr = addr.clone();
            std::thread::spawn(move || {
                let r = http_get(&addr, "/stats").unwrap();
                r.split("\r\n\r\n").nth(1).unwrap().to_owned()
            })
        })
        .map(|h| h.join().unwrap())
        .collect();
    assert!(polls.windows(2).all(|w| w[0] == w[1]));

    Command::new("kill").args(["-TERM", &child.id().to_string()]).status().unwrap();
    let status = child.wait().unwrap();
    assert!(status.success());
    assert!(dir.path().join("m.json.events.jsonl").exists());
}
