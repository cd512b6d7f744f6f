//! Greedy matching, precision/recall curves, VOC and COCO average precision.

use organdet::eval::{
    ap_voc, evaluate, match_detections, pr_curve, render_report, Detection, GroundTruthBox,
    ReportMethod,
};
use organdet::geometry::BoundingBox;
use organdet::CategoryVocabulary;

fn main() {
    let vocab = CategoryVocabulary::organs();
    let leaf = vocab.id_of("Leaf").unwrap();
    let b = |x: f64| BoundingBox::new(x, 0.0, x + 10.0, 10.0).expect("valid box");

    let gts: Vec<GroundTruthBox> = [0.0, 20.0, 40.0]
        .map(|x| GroundTruthBox {
            image_id: "sheet".into(),
            bbox: b(x),
            category: leaf,
        })
        .to_vec();
    let det = |x: f64, score: f64| Detection {
        image_id: "sheet".into(),
        bbox: b(x),
        category: leaf,
        score,
    };
    let dets = [
        det(0.0, 0.95),
        det(1.0, 0.9), // duplicate of the first object
        det(21.0, 0.8),
        det(100.0, 0.7), // background
    ];

    let m = match_detections(&dets, &gts, 0.5, leaf);
    println!("TP flags in score order: {:?}", m.flags());
    let curve = pr_curve(&m);
    for p in &curve.points {
        println!("  recall {:.3} precision {:.3}", p.recall, p.precision);
    }
    println!("VOC AP50 = {:.4}", ap_voc(&curve).unwrap());

    let report = evaluate(&dets, &gts, &vocab, 0.5);
    print!("{}", render_report(&report, ReportMethod::Both));
}
