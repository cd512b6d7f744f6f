//! Region-proposal machinery that does not involve learned weights.
//!
//! Anchor tiling, the `(tx, ty, tw, th)` box parameterization, anchor
//! labeling against ground truth, greedy non-maximum suppression with
//! score-ordered proposal selection, and RoI max-pooling over numeric grids.

mod anchors;
mod deltas;
mod labeling;
mod nms;
mod roi_pool;

pub use anchors::{anchor_shape, generate_anchors, Anchor, AnchorConfig};
pub use deltas::{decode_deltas, encode_deltas, BoxDeltas, MAX_LOG_SCALE};
pub use labeling::{label_anchors, AnchorLabel};
pub use nms::{nms, select_proposals, ProposalConfig, TEST_NMS_THRESHOLD, TRAIN_NMS_THRESHOLD};
pub use roi_pool::{roi_max_pool, FeatureGrid};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RpnError {
    #[error("invalid anchor config: {0}")]
    InvalidConfig(String),
    #[error("expected {expected} grid sizes (one per level), got {got}")]
    LevelMismatch { expected: usize, got: usize },
    #[error("{what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{0} box must have positive width and height")]
    NonPositiveBox(&'static str),
    #[error("deltas must be finite")]
    NonFiniteDeltas,
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(f64),
    #[error("feature grid: {0}")]
    InvalidGrid(String),
    #[error("region of interest lies entirely outside the {height}x{width} grid")]
    RoiOutsideGrid { height: usize, width: usize },
}
