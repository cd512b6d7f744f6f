use serde::{Deserialize, Serialize};

use super::RpnError;
use crate::geometry::BoundingBox;

/// Upper bound applied to `tw` and `th` when decoding, `ln(1000 / 16)`.
pub const MAX_LOG_SCALE: f64 = 4.135_166_556_742_356;

/// Offsets relating an anchor to a target box: center shifts in units of the
/// anchor size and log ratios of the sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDeltas {
    pub tx: f64,
    pub ty: f64,
    pub tw: f64,
    pub th: f64,
}

impl BoxDeltas {
    pub const ZERO: Self = Self {
        tx: 0.0,
        ty: 0.0,
        tw: 0.0,
        th: 0.0,
    };
}

pub fn encode_deltas(anchor: &BoundingBox, gt: &BoundingBox) -> Result<BoxDeltas, RpnError> {
    if !anchor.has_positive_area() {
        return Err(RpnError::NonPositiveBox("anchor"));
    }
    if !gt.has_positive_area() {
        return Err(RpnError::NonPositiveBox("ground-truth"));
    }
    let (ax, ay) = anchor.center();
    let (aw, ah) = (anchor.width(), anchor.height());
    let (gx, gy) = gt.center();
    Ok(BoxDeltas {
        tx: (gx - ax) / aw,
        ty: (gy - ay) / ah,
        tw: (gt.width() / aw).ln(),
        th: (gt.height() / ah).ln(),
    })
}

/// Inverse of [`encode_deltas`]. `tw` and `th` are clamped to [`MAX_LOG_SCALE`].
pub fn decode_deltas(anchor: &BoundingBox, d: &BoxDeltas) -> Result<BoundingBox, RpnError> {
    if !anchor.has_positive_area() {
        return Err(RpnError::NonPositiveBox("anchor"));
    }
    if !(d.tx.is_finite() && d.ty.is_finite() && d.tw.is_finite() && d.th.is_finite()) {
        return Err(RpnError::NonFiniteDeltas);
    }
    let (ax, ay) = anchor.center();
    let (aw, ah) = (anchor.width(), anchor.height());
    let cx = ax + d.tx * aw;
    let cy = ay + d.ty * ah;
    let w = aw * d.tw.min(MAX_LOG_SCALE).exp();
    let h = ah * d.th.min(MAX_LOG_SCALE).exp();
    Ok(BoundingBox {
        x_min: cx - w / 2.0,
        y_min: cy - h / 2.0,
        x_max: cx + w / 2.0,
        y_max: cy + h / 2.0,
    })
}
