//! Plant-organ detection tooling for herbarium scans.
//!
//! The deterministic parts of a Faster R-CNN organ detector (box geometry,
//! anchors, box deltas, NMS, RoI pooling), VOC and COCO average precision,
//! annotation dataset IO and an event-sourced store for reviewing predicted
//! boxes.

pub mod category;
pub mod dataset;
pub mod eval;
pub mod geometry;
pub mod review;
pub mod rpn;
mod table;

pub use category::{CategoryId, CategoryVocabulary, Organ};
pub use dataset::{AnnotatedBox, AnnotatedImage, DatasetManifest, Provenance, Split};
pub use geometry::BoundingBox;
