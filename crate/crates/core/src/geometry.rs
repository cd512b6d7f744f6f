//! Axis-aligned bounding-box arithmetic.
//!
//! Boxes are corner-based with continuous pixel coordinates and the origin at
//! the top-left of the image. Width is `x_max - x_min`; there is no "+1"
//! inclusive-pixel convention anywhere in this crate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("box coordinates must be finite, got [{0}, {1}, {2}, {3}]")]
    NonFinite(f64, f64, f64, f64),
    #[error("inverted box: x_max {x_max} < x_min {x_min} or y_max {y_max} < y_min {y_min}")]
    Inverted {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
    },
}

/// Axis-aligned rectangle in pixel coordinates.
///
/// Serialized as a `[x_min, y_min, x_max, y_max]` array; deserialization
/// rejects inverted or non-finite boxes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let b = Self {
            x_min,
            y_min,
            x_max,
            y_max,
        };
        b.validate()?;
        Ok(b)
    }

    /// Builds a box from a top-left corner plus width and height (COCO layout).
    pub fn from_xywh(x: f64, y: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(x, y, x + width, y + height)
    }

    /// Builds a box of the given size centered on `(cx, cy)`.
    pub fn from_center(cx: f64, cy: f64, width: f64, height: f64) -> Result<Self, GeometryError> {
        Self::new(
            cx - width / 2.0,
            cy - height / 2.0,
            cx + width / 2.0,
            cy + height / 2.0,
        )
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let Self {
            x_min,
            y_min,
            x_max,
            y_max,
        } = *self;
        if !(x_min.is_finite() && y_min.is_finite() && x_max.is_finite() && y_max.is_finite()) {
            return Err(GeometryError::NonFinite(x_min, y_min, x_max, y_max));
        }
        if x_max < x_min || y_max < y_min {
            return Err(GeometryError::Inverted {
                x_min,
                y_min,
                x_max,
                y_max,
            });
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    #[inline]
    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    #[inline]
    pub fn center(&self) -> (f64, f64) {
        (
            (self.x_min + self.x_max) / 2.0,
            (self.y_min + self.y_max) / 2.0,
        )
    }

    /// True when the box has strictly positive width and height.
    pub fn has_positive_area(&self) -> bool {
        self.width() > 0.0 && self.height() > 0.0
    }

    /// `[x, y, width, height]`, the COCO box layout.
    pub fn to_xywh(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.width(), self.height()]
    }

    pub fn intersection_area(&self, other: &Self) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &Self) -> f64 {
        iou(self, other)
    }

    pub fn clip(&self, width: f64, height: f64) -> Self {
        clip(self, width, height)
    }

    /// Multiplies every coordinate by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }

    /// True when the box lies inside `[0, width] x [0, height]`.
    pub fn is_within(&self, width: f64, height: f64) -> bool {
        self.x_min >= 0.0 && self.y_min >= 0.0 && self.x_max <= width && self.y_max <= height
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = GeometryError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        Self::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x_min, b.y_min, b.x_max, b.y_max]
    }
}

/// Area of a box in square pixels.
pub fn area(b: &BoundingBox) -> f64 {
    b.area()
}

/// Intersection over union.
///
/// Returns 0 when the union is empty, so a zero-area box has IoU 0 against
/// everything, itself included.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Clamps a box to `[0, width] x [0, height]`.
///
/// A box entirely outside the canvas collapses to a degenerate box on the
/// nearest border.
pub fn clip(b: &BoundingBox, width: f64, height: f64) -> BoundingBox {
    let cx = |v: f64| v.clamp(0.0, width);
    let cy = |v: f64| v.clamp(0.0, height);
    BoundingBox {
        x_min: cx(b.x_min),
        y_min: cy(b.y_min),
        x_max: cx(b.x_max),
        y_max: cy(b.y_max),
    }
}

/// Uniform resize that fits a source image inside a target canvas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleTransform {
    pub scale: f64,
    pub source_width: u32,
    pub source_height: u32,
    pub target_width: u32,
    pub target_height: u32,
    /// `floor(source_width * scale)`, computed in exact integer arithmetic.
    pub output_width: u32,
    /// `floor(source_height * scale)`, computed in exact integer arithmetic.
    pub output_height: u32,
}

impl ScaleTransform {
    pub fn apply(&self, b: &BoundingBox) -> BoundingBox {
        transform_box(b, self)
    }

    /// The transform that maps output coordinates back onto the source image.
    pub fn inverse(&self) -> ScaleTransform {
        ScaleTransform {
            scale: 1.0 / self.scale,
            source_width: self.output_width,
            source_height: self.output_height,
            target_width: self.source_width,
            target_height: self.source_height,
            output_width: self.source_width,
            output_height: self.source_height,
        }
    }
}

/// Computes the aspect-preserving scale that fits `source` inside `target`.
///
/// # Panics
///
/// Panics if any dimension is zero.
pub fn fit_rescale(
    source_width: u32,
    source_height: u32,
    target_width: u32,
    target_height: u32,
) -> ScaleTransform {
    assert!(
        source_width > 0 && source_height > 0 && target_width > 0 && target_height > 0,
        "fit_rescale dimensions must be positive"
    );
    let (sw, sh, tw, th) = (
        u64::from(source_width),
        u64::from(source_height),
        u64::from(target_width),
        u64::from(target_height),
    );
    // tw/sw <= th/sh  <=>  tw*sh <= th*sw
    let (scale, output_width, output_height) = if tw * sh <= th * sw {
        (
            target_width as f64 / source_width as f64,
            target_width,
            (sh * tw / sw) as u32,
        )
    } else {
        (
            target_height as f64 / source_height as f64,
            (sw * th / sh) as u32,
            target_height,
        )
    };
    ScaleTransform {
        scale,
        source_width,
        source_height,
        target_width,
        target_height,
        output_width,
        output_height,
    }
}

/// Maps a box from source coordinates into rescaled coordinates.
pub fn transform_box(b: &BoundingBox, t: &ScaleTransform) -> BoundingBox {
    b.scaled(t.scale)
}
