//! Class-agnostic and per-category non-maximum suppression, and proposal selection.

use organdet::geometry::BoundingBox;
use organdet::rpn::{nms, select_proposals, ProposalConfig, TEST_NMS_THRESHOLD};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let boxes = [
        BoundingBox::new(0.0, 0.0, 10.0, 10.0)?,
        BoundingBox::new(1.0, 1.0, 11.0, 11.0)?,
        BoundingBox::new(2.0, 0.0, 12.0, 10.0)?,
        BoundingBox::new(50.0, 50.0, 60.0, 60.0)?,
    ];
    let scores = [0.9, 0.8, 0.7, 0.6];
    let categories = ["Leaf", "Stem", "Leaf", "Leaf"];

    let kept = nms::<()>(&boxes, &scores, TEST_NMS_THRESHOLD, None)?;
    println!("class-agnostic at {TEST_NMS_THRESHOLD}: kept {kept:?}");
    let kept = nms(&boxes, &scores, TEST_NMS_THRESHOLD, Some(&categories[..]))?;
    println!("per-category at {TEST_NMS_THRESHOLD}: kept {kept:?}");

    for (b, s) in select_proposals(&boxes, &scores, &ProposalConfig::training(2))? {
        println!("proposal {s:.1}: {b:?}");
    }
    Ok(())
}
