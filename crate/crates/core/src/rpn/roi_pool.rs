use serde::{Deserialize, Serialize};

use super::RpnError;
use crate::geometry::{clip, BoundingBox};

/// Dense row-major matrix of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self, RpnError> {
        if height == 0 || width == 0 {
            return Err(RpnError::InvalidGrid("dimensions must be positive".into()));
        }
        if values.len() != height * width {
            return Err(RpnError::InvalidGrid(format!(
                "{} values for a {height}x{width} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(RpnError::InvalidGrid("values must be finite".into()));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self, RpnError> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.width)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Cell index range `[lo, hi)` touched by the span `[start, end)` along an
/// axis of `len` cells, widened to at least one cell.
fn cell_range(start: f64, end: f64, len: usize) -> (usize, usize) {
    let lo = (start.floor().max(0.0) as usize).min(len - 1);
    let hi = (end.ceil().max(0.0) as usize).clamp(lo + 1, len);
    (lo, hi)
}

/// Max-pools a region of `grid` into a `k x k` grid.
///
/// `roi` is in cell coordinates (cell `(r, c)` spans `[c, c+1) x [r, r+1)`).
/// The region is clipped to the grid and split into `k` equal real-valued
/// spans per axis; each output cell is the max over the grid cells its span
/// touches, and always covers at least one cell.
pub fn roi_max_pool(grid: &FeatureGrid, roi: &BoundingBox, k: usize) -> Result<FeatureGrid, RpnError> {
    if k == 0 {
        return Err(RpnError::InvalidGrid("output size must be at least 1".into()));
    }
    roi.validate()
        .map_err(|e| RpnError::InvalidGrid(e.to_string()))?;
    let (w, h) = (grid.width as f64, grid.height as f64);
    if roi.x_max <= 0.0 || roi.y_max <= 0.0 || roi.x_min >= w || roi.y_min >= h {
        return Err(RpnError::RoiOutsideGrid {
            height: grid.height,
            width: grid.width,
        });
    }
    let r = clip(roi, w, h);
    let bin_w = |b: usize| r.x_min + (r.x_max - r.x_min) * b as f64 / k as f64;
    let bin_h = |b: usize| r.y_min + (r.y_max - r.y_min) * b as f64 / k as f64;

    let cols: Vec<(usize, usize)> = (0..k)
        .map(|b| cell_range(bin_w(b), bin_w(b + 1), grid.width))
        .collect();
    let mut out = Vec::with_capacity(k * k);
    for by in 0..k {
        let (r0, r1) = cell_range(bin_h(by), bin_h(by + 1), grid.height);
        for &(c0, c1) in &cols {
            let mut m = f64::NEG_INFINITY;
            for row in r0..r1 {
                for col in c0..c1 {
                    m = m.max(grid.get(row, col));
                }
            }
            out.push(m);
        }
    }
    FeatureGrid::new(k, k, out)
}
