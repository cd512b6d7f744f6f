use serde::{Deserialize, Serialize};

use super::nms::ProposalConfig;
use super::{Anchor, RpnError};
use crate::geometry::{iou, BoundingBox};

/// Training target assigned to one anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnchorLabel {
    Foreground { matched_gt: usize },
    Background,
    Ignore,
}

impl AnchorLabel {
    pub fn is_foreground(&self) -> bool {
        matches!(self, Self::Foreground { .. })
    }

    pub fn matched_gt(&self) -> Option<usize> {
        match self {
            Self::Foreground { matched_gt } => Some(*matched_gt),
            _ => None,
        }
    }
}

/// Labels anchors as foreground, background or ignored.
///
/// An anchor whose best IoU reaches `fg_iou` is foreground and matched to its
/// best ground truth; below `bg_iou` it is background; anything between is
/// ignored. Afterwards each ground truth promotes its single best anchor
/// (positive IoU only) to foreground if that anchor is not foreground
/// already, matching it to that ground truth. Ties go to the lowest index.
pub fn label_anchors(
    anchors: &[Anchor],
    gts: &[BoundingBox],
    cfg: &ProposalConfig,
) -> Result<Vec<AnchorLabel>, RpnError> {
    cfg.validate()?;
    if gts.is_empty() {
        return Ok(vec![AnchorLabel::Background; anchors.len()]);
    }

    let ious: Vec<Vec<f64>> = anchors
        .iter()
        .map(|a| gts.iter().map(|g| iou(&a.bbox, g)).collect())
        .collect();

    let mut labels: Vec<AnchorLabel> = ious
        .iter()
        .map(|row| {
            let (best_gt, best) = argmax(row.iter().copied());
            if best >= cfg.fg_iou {
                AnchorLabel::Foreground {
                    matched_gt: best_gt,
                }
            } else if best < cfg.bg_iou {
                AnchorLabel::Background
            } else {
                AnchorLabel::Ignore
            }
        })
        .collect();

    for g in 0..gts.len() {
        if anchors.is_empty() {
            break;
        }
        let (best_anchor, best) = argmax(ious.iter().map(|row| row[g]));
        if best > 0.0 && !labels[best_anchor].is_foreground() {
            labels[best_anchor] = AnchorLabel::Foreground { matched_gt: g };
        }
    }
    Ok(labels)
}

/// First index of the maximum value.
fn argmax(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
