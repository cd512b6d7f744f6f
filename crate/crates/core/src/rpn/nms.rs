use serde::{Deserialize, Serialize};

use super::RpnError;
use crate::geometry::{iou, BoundingBox};

/// Suppression threshold used while training the proposal stage.
pub const TRAIN_NMS_THRESHOLD: f64 = 0.6;
/// Suppression threshold used at inference time.
pub const TEST_NMS_THRESHOLD: f64 = 0.25;

/// Proposal filtering and anchor labeling thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    pub nms_threshold: f64,
    /// Number of proposals kept after suppression.
    pub top_n: usize,
    pub fg_iou: f64,
    pub bg_iou: f64,
}

impl ProposalConfig {
    pub fn training(top_n: usize) -> Self {
        Self {
            nms_threshold: TRAIN_NMS_THRESHOLD,
            top_n,
            fg_iou: 0.7,
            bg_iou: 0.3,
        }
    }

    pub fn testing(top_n: usize) -> Self {
        Self {
            nms_threshold: TEST_NMS_THRESHOLD,
            ..Self::training(top_n)
        }
    }

    pub fn validate(&self) -> Result<(), RpnError> {
        for t in [self.nms_threshold, self.fg_iou, self.bg_iou] {
            if !(0.0..=1.0).contains(&t) {
                return Err(RpnError::ThresholdOutOfRange(t));
            }
        }
        if self.bg_iou > self.fg_iou {
            return Err(RpnError::InvalidConfig(format!(
                "bg_iou {} exceeds fg_iou {}",
                self.bg_iou, self.fg_iou
            )));
        }
        if self.top_n == 0 {
            return Err(RpnError::InvalidConfig("top_n must be positive".into()));
        }
        Ok(())
    }
}

/// Indices sorted by descending score; equal scores keep ascending index order.
pub(crate) fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Greedy non-maximum suppression.
///
/// Visits boxes from highest to lowest score and drops any box whose IoU with
/// an already kept box is strictly greater than `threshold`. With
/// `categories`, only boxes sharing a category suppress each other. Returns
/// kept indices in keep order.
pub fn nms<C: PartialEq>(
    boxes: &[BoundingBox],
    scores: &[f64],
    threshold: f64,
    categories: Option<&[C]>,
) -> Result<Vec<usize>, RpnError> {
    if scores.len() != boxes.len() {
        return Err(RpnError::LengthMismatch {
            what: "scores",
            expected: boxes.len(),
            got: scores.len(),
        });
    }
    if let Some(cats) = categories {
        if cats.len() != boxes.len() {
            return Err(RpnError::LengthMismatch {
                what: "categories",
                expected: boxes.len(),
                got: cats.len(),
            });
        }
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(RpnError::ThresholdOutOfRange(threshold));
    }

    let order = rank_by_score(scores);
    let mut suppressed = vec![false; boxes.len()];
    let mut keep = Vec::new();
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        keep.push(i);
        for &j in &order[pos + 1..] {
            if suppressed[j] {
                continue;
            }
            if let Some(cats) = categories {
                if cats[i] != cats[j] {
                    continue;
                }
            }
            if iou(&boxes[i], &boxes[j]) > threshold {
                suppressed[j] = true;
            }
        }
    }
    Ok(keep)
}

/// Score-sorts candidate boxes, suppresses overlaps and keeps the best `top_n`.
pub fn select_proposals(
    boxes: &[BoundingBox],
    scores: &[f64],
    cfg: &ProposalConfig,
) -> Result<Vec<(BoundingBox, f64)>, RpnError> {
    cfg.validate()?;
    let keep = nms::<()>(boxes, scores, cfg.nms_threshold, None)?;
    Ok(keep
        .into_iter()
        .take(cfg.top_n)
        .map(|i| (boxes[i], scores[i]))
        .collect())
}
