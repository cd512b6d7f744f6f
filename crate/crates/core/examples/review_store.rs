//! Event-sourced review: corrections, conflicts, replay from the log and export.

use organdet::dataset::Provenance;
use organdet::geometry::BoundingBox;
use organdet::review::{BoxSnapshot, Correction, CorrectionRequest, ReviewStatus, ReviewStore};
use organdet::{AnnotatedBox, AnnotatedImage, DatasetManifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut manifest = DatasetManifest::default();
    let mut img = AnnotatedImage::new("sheet", "sheet.jpg", 1200, 800);
    img.provenance = Provenance::Predicted;
    let predicted = BoundingBox::new(10.0, 10.0, 50.0, 50.0)?;
    img.boxes.push(AnnotatedBox::predicted(predicted, "Leaf", 0.87));
    manifest.images.push(img);

    let dir = tempfile::tempdir()?;
    let log = dir.path().join("events.jsonl");
    let mut store = ReviewStore::open(manifest.clone(), &log)?;

    let moved = Correction::Move {
        index: 0,
        before: BoxSnapshot::new(predicted, "Leaf"),
        after: BoxSnapshot::new(BoundingBox::new(12.0, 10.0, 52.0, 48.0)?, "Leaf"),
    };
    let out = store.apply("sheet", CorrectionRequest::new(moved.clone()).by("curator"), 1)?;
    println!("seq {} -> {:?}", out.event.seq, out.status);

    // the same edit again is stale: the box no longer matches `before`
    let err = store.apply("sheet", CorrectionRequest::new(moved), 2).unwrap_err();
    println!("resubmitted: {err}");

    drop(store);
    let store = ReviewStore::open(manifest, &log)?;
    println!("replayed {} events, status {:?}", store.log().len(), store.status("sheet"));

    let export = store.export(&[ReviewStatus::Verified, ReviewStatus::Corrected]);
    println!("{}", export.to_json());
    Ok(())
}
