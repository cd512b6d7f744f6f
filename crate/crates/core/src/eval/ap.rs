use serde::{Deserialize, Serialize};

use super::{match_detections, Detection, GroundTruthBox, MatchResult};
use crate::category::CategoryId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision and recall after each ranked detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub gt_count: usize,
}

pub fn pr_curve(m: &MatchResult) -> PrCurve {
    if m.gt_count == 0 {
        return PrCurve {
            points: Vec::new(),
            gt_count: 0,
        };
    }
    let gt = m.gt_count as f64;
    let mut tp = 0usize;
    let points = m
        .ranked
        .iter()
        .enumerate()
        .map(|(k, r)| {
            tp += usize::from(r.outcome.is_tp());
            PrPoint {
                recall: tp as f64 / gt,
                precision: tp as f64 / (k + 1) as f64,
            }
        })
        .collect();
    PrCurve {
        points,
        gt_count: m.gt_count,
    }
}

/// VOC 2012 all-points average precision on a 0-1 scale.
///
/// `None` when there is no ground truth, so the category can be left out of
/// cross-category means.
pub fn ap_voc(curve: &PrCurve) -> Option<f64> {
    if curve.gt_count == 0 {
        return None;
    }
    let mut mrec = Vec::with_capacity(curve.points.len() + 2);
    let mut mpre = Vec::with_capacity(curve.points.len() + 2);
    mrec.push(0.0);
    mpre.push(0.0);
    for p in &curve.points {
        mrec.push(p.recall);
        mpre.push(p.precision);
    }
    mrec.push(1.0);
    mpre.push(0.0);

    for i in (0..mpre.len() - 1).rev() {
        mpre[i] = mpre[i].max(mpre[i + 1]);
    }
    let ap = (0..mrec.len() - 1)
        .filter(|&i| mrec[i + 1] != mrec[i])
        .map(|i| (mrec[i + 1] - mrec[i]) * mpre[i + 1])
        .sum();
    Some(ap)
}

/// Recall sample points used by the COCO evaluator, `0.00, 0.01, ..., 1.00`.
///
/// Generated as `i * 0.01` to reproduce the reference evaluator's float values.
fn coco_recall_points() -> impl Iterator<Item = f64> {
    (0..=100).map(|i| if i == 100 { 1.0 } else { i as f64 * 0.01 })
}

/// 101-point interpolated average precision on a 0-100 scale.
pub fn ap_coco_from_curve(curve: &PrCurve) -> Option<f64> {
    if curve.gt_count == 0 {
        return None;
    }
    let recall: Vec<f64> = curve.points.iter().map(|p| p.recall).collect();
    let mut envelope: Vec<f64> = curve.points.iter().map(|p| p.precision).collect();
    for i in (1..envelope.len()).rev() {
        envelope[i - 1] = envelope[i - 1].max(envelope[i]);
    }
    let mut sum = 0.0;
    for r in coco_recall_points() {
        // first rank whose recall reaches r
        let idx = recall.partition_point(|&x| x < r);
        match envelope.get(idx) {
            Some(p) => sum += p,
            None => break,
        }
    }
    Some(sum / 101.0 * 100.0)
}

/// COCO average precision for one category, averaged over `iou_thresholds`.
///
/// # Panics
///
/// Panics if `iou_thresholds` is empty.
pub fn ap_coco(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    category: CategoryId,
    iou_thresholds: &[f64],
) -> Option<f64> {
    assert!(!iou_thresholds.is_empty(), "need at least one IoU threshold");
    let per: Option<Vec<f64>> = iou_thresholds
        .iter()
        .map(|&t| ap_coco_from_curve(&pr_curve(&match_detections(dets, gts, t, category))))
        .collect();
    per.map(|v| v.iter().sum::<f64>() / v.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{MatchOutcome, RankedDetection};
    use crate::geometry::BoundingBox;

    fn result(flags: &[bool], gt_count: usize) -> MatchResult {
        MatchResult {
            category: CategoryId(1),
            iou_threshold: 0.5,
            ranked: flags
                .iter()
                .enumerate()
                .map(|(i, &tp)| RankedDetection {
                    det_index: i,
                    score: 1.0 - i as f64 * 0.01,
                    outcome: if tp {
                        MatchOutcome::TruePositive { gt_index: i }
                    } else {
                        MatchOutcome::FalsePositive
                    },
                })
                .collect(),
            gt_count,
        }
    }

    fn pts(c: &PrCurve) -> Vec<(f64, f64)> {
        c.points.iter().map(|p| (p.recall, p.precision)).collect()
    }

    #[test]
    fn curve_examples() {
        assert_eq!(pts(&pr_curve(&result(&[true], 1))), vec![(1.0, 1.0)]);
        assert_eq!(pts(&pr_curve(&result(&[true, false], 1))), vec![(1.0, 1.0), (1.0, 0.5)]);
        assert_eq!(
            pts(&pr_curve(&result(&[true, false, true], 2))),
            vec![(0.5, 1.0), (0.5, 0.5), (1.0, 2.0 / 3.0)]
        );
        assert!(pr_curve(&result(&[false], 0)).points.is_empty());
    }

    #[test]
    fn voc_examples() {
        assert_eq!(ap_voc(&pr_curve(&result(&[true], 1))), Some(1.0));
        let v = ap_voc(&pr_curve(&result(&[true, false, true], 2))).unwrap();
        assert!((v - 5.0 / 6.0).abs() < 1e-12);
        assert_eq!(ap_voc(&pr_curve(&result(&[], 3))), Some(0.0));
        assert_eq!(ap_voc(&pr_curve(&result(&[], 0))), None);
    }

    #[test]
    fn coco_examples() {
        assert_eq!(ap_coco_from_curve(&pr_curve(&result(&[true], 1))), Some(100.0));
        assert_eq!(ap_coco_from_curve(&pr_curve(&result(&[], 2))), Some(0.0));
        // recall 0.5 reached at precision 1, recall 1 at 2/3:
        // 51 samples at 1.0, 50 samples at 2/3
        let v = ap_coco_from_curve(&pr_curve(&result(&[true, false, true], 2))).unwrap();
        let want = (51.0 + 50.0 * 2.0 / 3.0) / 101.0 * 100.0;
        assert!((v - want).abs() < 1e-9);
        // the 101-point grid differs from the all-points area
        assert!((v / 100.0 - 5.0 / 6.0).abs() > 1e-3);
    }

    #[test]
    fn coco_threshold_sensitivity() {
        let gt_box = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        // 10 x 6 box inside gt: IoU 0.6
        let det_box = BoundingBox::new(0.0, 0.0, 10.0, 6.0).unwrap();
        let gts = [GroundTruthBox {
            image_id: "x".into(),
            bbox: gt_box,
            category: CategoryId(1),
        }];
        let dets = [Detection {
            image_id: "x".into(),
            bbox: det_box,
            category: CategoryId(1),
            score: 0.9,
        }];
        assert_eq!(ap_coco(&dets, &gts, CategoryId(1), &[0.5]), Some(100.0));
        assert_eq!(ap_coco(&dets, &gts, CategoryId(1), &[0.75]), Some(0.0));
        assert_eq!(ap_coco(&dets, &gts, CategoryId(1), &[0.5, 0.75]), Some(50.0));
        assert_eq!(ap_coco(&dets, &gts, CategoryId(2), &[0.5]), None);
    }
}
