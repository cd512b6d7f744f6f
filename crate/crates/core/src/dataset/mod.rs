//! Annotation datasets: the canonical manifest, LabelImg/VOC XML, COCO JSON,
//! per-split statistics and aspect-preserving rescaling.

mod coco;
mod stats;
pub mod synthetic;
mod voc;

pub use coco::{
    read_coco_json, write_coco_json, CocoAnnotation, CocoCategory, CocoDocument, CocoImage,
};
pub use stats::{compute_stats, render_stats, CategoryCounts, DatasetStats, SplitCounts};
pub use voc::{
    parse_voc_xml, read_voc_dataset, write_voc_dataset, write_voc_xml, VocError, VocOptions,
};

use std::collections::HashSet;
use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{CategoryVocabulary, VocabularyError};
use crate::eval::{Detection, GroundTruthBox};
use crate::geometry::{clip, fit_rescale, transform_box, BoundingBox};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Voc {
        path: PathBuf,
        #[source]
        source: VocError,
    },
    #[error(transparent)]
    VocDocument(#[from] VocError),
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported manifest version {0}, expected {MANIFEST_VERSION}")]
    UnsupportedVersion(u32),
    #[error("annotation {annotation} references unknown image id {image_id}")]
    DanglingImage { annotation: u64, image_id: u64 },
    #[error("annotation {annotation} references unknown category id {category_id}")]
    DanglingCategory { annotation: u64, category_id: u64 },
    #[error("category {category:?} is not in the vocabulary")]
    UnknownCategory { category: String },
    #[error("box {index} of image {image_id} has no score")]
    MissingScore { image_id: String, index: usize },
    #[error(transparent)]
    Vocabulary(#[from] VocabularyError),
    #[error("invalid manifest: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        })
    }
}

/// Where the boxes of an image came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    #[default]
    Manual,
    Predicted,
    Verified,
    Corrected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedBox {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub category: String,
    /// Model confidence; only predicted boxes carry one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl AnnotatedBox {
    pub fn new(bbox: BoundingBox, category: impl Into<String>) -> Self {
        Self {
            bbox,
            category: category.into(),
            score: None,
        }
    }

    pub fn predicted(bbox: BoundingBox, category: impl Into<String>, score: f64) -> Self {
        Self {
            score: Some(score),
            ..Self::new(bbox, category)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub split: Split,
    #[serde(default)]
    pub provenance: Provenance,
    /// Cumulative resize factor from the original scan, once rescaled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    #[serde(default)]
    pub boxes: Vec<AnnotatedBox>,
}

impl AnnotatedImage {
    pub fn new(image_id: impl Into<String>, file_name: impl Into<String>, width: u32, height: u32) -> Self {
        Self {
            image_id: image_id.into(),
            file_name: file_name.into(),
            width,
            height,
            split: Split::Unassigned,
            provenance: Provenance::Manual,
            scale: None,
            boxes: Vec::new(),
        }
    }
}

/// Versioned, split-aware collection of annotated images.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    #[serde(default)]
    pub source: String,
    pub vocabulary: CategoryVocabulary,
    pub images: Vec<AnnotatedImage>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        Self::new(CategoryVocabulary::default())
    }
}

impl DatasetManifest {
    pub fn new(vocabulary: CategoryVocabulary) -> Self {
        Self {
            version: MANIFEST_VERSION,
            source: String::new(),
            vocabulary,
            images: Vec::new(),
        }
    }

    pub fn box_count(&self) -> usize {
        self.images.iter().map(|i| i.boxes.len()).sum()
    }

    pub fn image(&self, image_id: &str) -> Option<&AnnotatedImage> {
        self.images.iter().find(|i| i.image_id == image_id)
    }

    /// Checks every manifest invariant and reports the first violation.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.version != MANIFEST_VERSION {
            return Err(DatasetError::UnsupportedVersion(self.version));
        }
        let invalid = |msg: String| Err(DatasetError::Invalid(msg));
        let mut seen = HashSet::new();
        for img in &self.images {
            if img.image_id.is_empty() {
                return invalid("empty image_id".into());
            }
            if !seen.insert(img.image_id.as_str()) {
                return invalid(format!("duplicate image_id {:?}", img.image_id));
            }
            if img.width == 0 || img.height == 0 {
                return invalid(format!("image {:?} has zero width or height", img.image_id));
            }
            for (i, b) in img.boxes.iter().enumerate() {
                if let Err(e) = b.bbox.validate() {
                    return invalid(format!("image {:?} box {i}: {e}", img.image_id));
                }
                if !b.bbox.is_within(f64::from(img.width), f64::from(img.height)) {
                    return invalid(format!(
                        "image {:?} box {i} lies outside the {}x{} image",
                        img.image_id, img.width, img.height
                    ));
                }
                if !self.vocabulary.contains(&b.category) {
                    return Err(DatasetError::UnknownCategory {
                        category: b.category.clone(),
                    });
                }
                match b.score {
                    Some(s) if !(0.0..=1.0).contains(&s) => {
                        return invalid(format!(
                            "image {:?} box {i} score {s} outside [0, 1]",
                            img.image_id
                        ));
                    }
                    Some(_) if img.provenance != Provenance::Predicted => {
                        return invalid(format!(
                            "image {:?} box {i} carries a score but the image is not predicted",
                            img.image_id
                        ));
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        #[derive(Deserialize)]
        struct Probe {
            version: u32,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.version != MANIFEST_VERSION {
            return Err(DatasetError::UnsupportedVersion(probe.version));
        }
        let m: Self = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Writes the manifest through a temporary file renamed into place.
    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        write_atomic(path, self.to_json().as_bytes())
    }

    /// Boxes as evaluation ground truth, categories resolved against the
    /// manifest's own vocabulary.
    pub fn ground_truth(&self) -> Result<Vec<GroundTruthBox>, DatasetError> {
        let mut out = Vec::with_capacity(self.box_count());
        for img in &self.images {
            for b in &img.boxes {
                let category = self.vocabulary.id_of(&b.category).ok_or_else(|| {
                    DatasetError::UnknownCategory {
                        category: b.category.clone(),
                    }
                })?;
                out.push(GroundTruthBox {
                    image_id: img.image_id.clone(),
                    bbox: b.bbox,
                    category,
                });
            }
        }
        Ok(out)
    }

    /// Scored boxes as detections, categories resolved against `vocabulary`
    /// (normally the ground truth's).
    pub fn detections(&self, vocabulary: &CategoryVocabulary) -> Result<Vec<Detection>, DatasetError> {
        let mut out = Vec::with_capacity(self.box_count());
        for img in &self.images {
            for (index, b) in img.boxes.iter().enumerate() {
                let category = vocabulary.id_of(&b.category).ok_or_else(|| {
                    DatasetError::UnknownCategory {
                        category: b.category.clone(),
                    }
                })?;
                let score = b.score.ok_or_else(|| DatasetError::MissingScore {
                    image_id: img.image_id.clone(),
                    index,
                })?;
                out.push(Detection {
                    image_id: img.image_id.clone(),
                    bbox: b.bbox,
                    category,
                    score,
                });
            }
        }
        Ok(out)
    }
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Resizes every image to fit inside `target_width x target_height`, keeping
/// its aspect ratio, and carries the boxes along.
///
/// Boxes are scaled by the image's factor and clipped to the floored output
/// size. The factor is multiplied into [`AnnotatedImage::scale`].
pub fn rescale_manifest(m: &DatasetManifest, target_width: u32, target_height: u32) -> DatasetManifest {
    let mut out = m.clone();
    for img in &mut out.images {
        let t = fit_rescale(img.width, img.height, target_width, target_height);
        let (w, h) = (f64::from(t.output_width), f64::from(t.output_height));
        for b in &mut img.boxes {
            b.bbox = clip(&transform_box(&b.bbox, &t), w, h);
        }
        img.width = t.output_width;
        img.height = t.output_height;
        img.scale = Some(img.scale.unwrap_or(1.0) * t.scale);
    }
    out
}
