use serde::{Deserialize, Serialize};

use super::RpnError;
use crate::geometry::BoundingBox;

/// Anchor tiling parameters, one scale per pyramid level.
///
/// Ratios are `width / height`, so `0.5` is a tall anchor and `2.0` a wide one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorConfig {
    /// Square root of the anchor area, in absolute pixels.
    pub scales: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Pixels per feature cell at each level; must be strictly increasing.
    pub strides: Vec<u32>,
    /// Fractional offset of the anchor center inside its cell.
    pub center_offset: f64,
}

impl Default for AnchorConfig {
    fn default() -> Self {
        Self {
            scales: vec![32.0, 64.0, 128.0, 256.0, 512.0, 1024.0],
            ratios: vec![0.5, 1.0, 2.0],
            strides: vec![4, 8, 16, 32, 64, 128],
            center_offset: 0.5,
        }
    }
}

impl AnchorConfig {
    pub fn levels(&self) -> usize {
        self.scales.len()
    }

    pub fn validate(&self) -> Result<(), RpnError> {
        let bad = |msg: &str| Err(RpnError::InvalidConfig(msg.to_owned()));
        if self.scales.is_empty() || self.ratios.is_empty() {
            return bad("scales and ratios must be non-empty");
        }
        if self.scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return bad("scales must be positive and finite");
        }
        if self.ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return bad("ratios must be positive and finite");
        }
        if self.strides.len() != self.scales.len() {
            return bad("need exactly one stride per scale");
        }
        if self.strides.contains(&0) || self.strides.windows(2).any(|w| w[0] >= w[1]) {
            return bad("strides must be positive and strictly increasing");
        }
        if !(0.0..=1.0).contains(&self.center_offset) {
            return bad("center_offset must lie in [0, 1]");
        }
        Ok(())
    }

    /// Feature grid size per level for an image, `ceil(dim / stride)`.
    pub fn grid_sizes_for_image(&self, width: u32, height: u32) -> Vec<(usize, usize)> {
        self.strides
            .iter()
            .map(|&s| (height.div_ceil(s) as usize, width.div_ceil(s) as usize))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub level: usize,
}

/// Width and height of an anchor with area `scale^2` and `width / height = ratio`.
pub fn anchor_shape(scale: f64, ratio: f64) -> (f64, f64) {
    let r = ratio.sqrt();
    (scale * r, scale / r)
}

/// Tiles anchors over per-level feature grids.
///
/// `grid_sizes[level]` is `(rows, cols)`. Output order is level-major, then
/// row-major over cells, then ratio order.
pub fn generate_anchors(
    cfg: &AnchorConfig,
    grid_sizes: &[(usize, usize)],
) -> Result<Vec<Anchor>, RpnError> {
    cfg.validate()?;
    if grid_sizes.len() != cfg.levels() {
        return Err(RpnError::LevelMismatch {
            expected: cfg.levels(),
            got: grid_sizes.len(),
        });
    }
    let total: usize = grid_sizes.iter().map(|(h, w)| h * w).sum::<usize>() * cfg.ratios.len();
    let mut out = Vec::with_capacity(total);
    for (level, (&(rows, cols), (&scale, &stride))) in grid_sizes
        .iter()
        .zip(cfg.scales.iter().zip(&cfg.strides))
        .enumerate()
    {
        let shapes: Vec<(f64, f64)> = cfg.ratios.iter().map(|&r| anchor_shape(scale, r)).collect();
        let stride = f64::from(stride);
        for i in 0..rows {
            let cy = (i as f64 + cfg.center_offset) * stride;
            for j in 0..cols {
                let cx = (j as f64 + cfg.center_offset) * stride;
                for &(w, h) in &shapes {
                    let bbox = BoundingBox {
                        x_min: cx - w / 2.0,
                        y_min: cy - h / 2.0,
                        x_max: cx + w / 2.0,
                        y_max: cy + h / 2.0,
                    };
                    out.push(Anchor { bbox, level });
                }
            }
        }
    }
    Ok(out)
}
