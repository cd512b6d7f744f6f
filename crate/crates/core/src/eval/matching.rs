use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Detection, GroundTruthBox};
use crate::category::CategoryId;
use crate::geometry::iou;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MatchOutcome {
    TruePositive { gt_index: usize },
    FalsePositive,
}

impl MatchOutcome {
    pub fn is_tp(&self) -> bool {
        matches!(self, Self::TruePositive { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDetection {
    /// Index into the detection slice handed to [`match_detections`].
    pub det_index: usize,
    pub score: f64,
    pub outcome: MatchOutcome,
}

/// Ranked detections of one category with their TP/FP flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub category: CategoryId,
    pub iou_threshold: f64,
    pub ranked: Vec<RankedDetection>,
    /// Ground-truth boxes of this category across all images.
    pub gt_count: usize,
}

impl MatchResult {
    pub fn tp_count(&self) -> usize {
        self.ranked.iter().filter(|r| r.outcome.is_tp()).count()
    }

    pub fn flags(&self) -> Vec<bool> {
        self.ranked.iter().map(|r| r.outcome.is_tp()).collect()
    }
}

/// Greedily matches detections of `category` to ground truth.
///
/// Detections are visited by descending score (stable on input order). Each
/// one claims the unclaimed ground-truth box of the same image and category
/// with the highest IoU, lowest index on ties, provided that IoU is at least
/// `iou_threshold`. Otherwise, including when its object was already claimed
/// by a higher-scored detection, it is a false positive.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    iou_threshold: f64,
    category: CategoryId,
) -> MatchResult {
    let mut by_image: HashMap<&str, Vec<usize>> = HashMap::new();
    let mut gt_count = 0;
    for (i, g) in gts.iter().enumerate() {
        if g.category == category {
            by_image.entry(g.image_id.as_str()).or_default().push(i);
            gt_count += 1;
        }
    }

    let mut order: Vec<usize> = (0..dets.len())
        .filter(|&i| dets[i].category == category)
        .collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));

    let mut claimed = vec![false; gts.len()];
    let ranked = order
        .into_iter()
        .map(|d| {
            let det = &dets[d];
            let mut best: Option<(usize, f64)> = None;
            for &g in by_image.get(det.image_id.as_str()).into_iter().flatten() {
                if claimed[g] {
                    continue;
                }
                let v = iou(&det.bbox, &gts[g].bbox);
                if v >= iou_threshold && best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            let outcome = match best {
                Some((g, _)) => {
                    claimed[g] = true;
                    MatchOutcome::TruePositive { gt_index: g }
                }
                None => MatchOutcome::FalsePositive,
            };
            RankedDetection {
                det_index: d,
                score: det.score,
                outcome,
            }
        })
        .collect();

    MatchResult {
        category,
        iou_threshold,
        ranked,
        gt_count,
    }
}
