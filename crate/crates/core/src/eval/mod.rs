//! Detection evaluation.
//!
//! Predictions are ranked by score and greedily matched to unclaimed ground
//! truth in the same image. From the resulting true/false-positive sequence
//! two average-precision definitions are computed:
//!
//! * Pascal VOC 2012: area under the all-points interpolated precision
//!   envelope, on a 0-1 scale, at IoU 0.5.
//! * COCO: the envelope sampled at 101 recall points, on a 0-100 scale, at
//!   IoU 0.5 (AP50), 0.75 (AP75) and averaged over 0.50:0.05:0.95 (AP).
//!
//! The two disagree on the same detections; both are reported side by side.

mod ap;
mod matching;
mod report;

pub use ap::{ap_coco, ap_coco_from_curve, ap_voc, pr_curve, PrCurve, PrPoint};
pub use matching::{match_detections, MatchOutcome, MatchResult, RankedDetection};
pub use report::{evaluate, render_report, CategoryReport, EvalReport, ReportMethod};

use serde::{Deserialize, Serialize};

use crate::category::CategoryId;
use crate::geometry::BoundingBox;

/// Minimum score for a prediction to be evaluated.
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.5;

/// IoU thresholds averaged by the COCO AP metric.
pub const COCO_IOU_THRESHOLDS: [f64; 10] = [0.5, 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub image_id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub category: CategoryId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthBox {
    pub image_id: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub category: CategoryId,
}
