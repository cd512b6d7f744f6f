use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AnnotatedBox, AnnotatedImage, DatasetError, DatasetManifest, Provenance};
use crate::category::CategoryVocabulary;
use crate::geometry::BoundingBox;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoImage {
    pub id: u64,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoAnnotation {
    pub id: u64,
    pub image_id: u64,
    pub category_id: u64,
    /// `[x, y, width, height]`
    pub bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    #[serde(default)]
    pub iscrowd: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocoCategory {
    pub id: u64,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supercategory: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CocoDocument {
    pub images: Vec<CocoImage>,
    pub annotations: Vec<CocoAnnotation>,
    pub categories: Vec<CocoCategory>,
}

/// Converts a manifest to COCO layout.
///
/// Image ids are assigned 1.. in `image_id` order and annotation ids 1.. in
/// that image order, then box order. Category ids are vocabulary ids.
pub fn write_coco_json(m: &DatasetManifest) -> CocoDocument {
    let mut images: Vec<&AnnotatedImage> = m.images.iter().collect();
    images.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    let mut doc = CocoDocument {
        categories: m
            .vocabulary
            .iter()
            .map(|(id, name)| CocoCategory {
                id: u64::from(id.0),
                name: name.to_owned(),
                supercategory: Some("organ".to_owned()),
            })
            .collect(),
        ..CocoDocument::default()
    };
    let mut next_ann = 1;
    for (k, img) in images.into_iter().enumerate() {
        let image_id = k as u64 + 1;
        doc.images.push(CocoImage {
            id: image_id,
            file_name: img.file_name.clone(),
            width: img.width,
            height: img.height,
        });
        for b in &img.boxes {
            let category_id = m
                .vocabulary
                .id_of(&b.category)
                .map_or(0, |c| u64::from(c.0));
            doc.annotations.push(CocoAnnotation {
                id: next_ann,
                image_id,
                category_id,
                bbox: b.bbox.to_xywh(),
                area: Some(b.bbox.area()),
                iscrowd: 0,
                score: b.score,
            });
            next_ann += 1;
        }
    }
    doc
}

/// Converts a COCO document into a manifest.
///
/// The manifest image id is the file stem of `file_name`. Annotations with a
/// `score` make the document a prediction file: every image is then marked
/// `predicted`. Split information does not exist in COCO and reads as
/// `unassigned`.
pub fn read_coco_json(doc: &CocoDocument) -> Result<DatasetManifest, DatasetError> {
    let mut cats: Vec<&CocoCategory> = doc.categories.iter().collect();
    cats.sort_by_key(|c| c.id);
    let vocabulary = CategoryVocabulary::new(cats.iter().map(|c| c.name.clone()))?;
    let cat_names: HashMap<u64, &str> = cats.iter().map(|c| (c.id, c.name.as_str())).collect();

    let predicted = doc.annotations.iter().any(|a| a.score.is_some());
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut manifest = DatasetManifest::new(vocabulary);
    manifest.source = "coco".to_owned();
    for img in &doc.images {
        let stem = Path::new(&img.file_name)
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| img.id.to_string());
        let mut out = AnnotatedImage::new(stem, img.file_name.clone(), img.width, img.height);
        if predicted {
            out.provenance = Provenance::Predicted;
        }
        if index.insert(img.id, manifest.images.len()).is_some() {
            return Err(DatasetError::Invalid(format!("duplicate COCO image id {}", img.id)));
        }
        manifest.images.push(out);
    }

    for ann in &doc.annotations {
        let &slot = index.get(&ann.image_id).ok_or(DatasetError::DanglingImage {
            annotation: ann.id,
            image_id: ann.image_id,
        })?;
        let name = cat_names
            .get(&ann.category_id)
            .ok_or(DatasetError::DanglingCategory {
                annotation: ann.id,
                category_id: ann.category_id,
            })?;
        let [x, y, w, h] = ann.bbox;
        let bbox = BoundingBox::from_xywh(x, y, w, h).map_err(|e| {
            DatasetError::Invalid(format!("annotation {}: {e}", ann.id))
        })?;
        manifest.images[slot].boxes.push(AnnotatedBox {
            bbox,
            category: (*name).to_owned(),
            score: ann.score,
        });
    }
    manifest.validate()?;
    Ok(manifest)
}

impl CocoDocument {
    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("COCO serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use proptest::prelude::*;

    fn one_box() -> DatasetManifest {
        let mut m = DatasetManifest::default();
        let mut img = AnnotatedImage::new("sheet", "sheet.jpg", 1200, 800);
        img.boxes.push(AnnotatedBox::new(
            BoundingBox::new(10.0, 20.0, 110.0, 220.0).unwrap(),
            "Leaf",
        ));
        m.images.push(img);
        m
    }

    #[test]
    fn layout() {
        let doc = write_coco_json(&one_box());
        assert_eq!(doc.images.len(), 1);
        assert_eq!(doc.annotations.len(), 1);
        assert_eq!(doc.categories.len(), 6);
        assert_eq!(doc.annotations[0].bbox, [10.0, 20.0, 100.0, 200.0]);
        assert_eq!(doc.annotations[0].category_id, 1);
        let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        assert_eq!(json["images"][0]["file_name"], "sheet.jpg");
        assert!(json["annotations"][0].get("score").is_none());
    }

    #[test]
    fn deterministic_ids() {
        let mut m = one_box();
        let mut a = AnnotatedImage::new("a", "a.jpg", 10, 10);
        a.boxes.push(AnnotatedBox::new(BoundingBox::new(0.0, 0.0, 1.0, 1.0).unwrap(), "Seed"));
        m.images.push(a);
        let doc = write_coco_json(&m);
        assert_eq!(doc.images[0].file_name, "a.jpg");
        assert_eq!(doc.annotations[0].image_id, 1);
        assert_eq!(doc.annotations[1].image_id, 2);
    }

    #[test]
    fn dangling_references() {
        let mut doc = write_coco_json(&one_box());
        doc.annotations[0].image_id = 9;
        assert!(matches!(read_coco_json(&doc), Err(DatasetError::DanglingImage { .. })));
        let mut doc = write_coco_json(&one_box());
        doc.annotations[0].category_id = 42;
        assert!(matches!(read_coco_json(&doc), Err(DatasetError::DanglingCategory { .. })));
    }

    #[test]
    fn scores_mark_predictions() {
        let mut m = one_box();
        m.images[0].provenance = Provenance::Predicted;
        m.images[0].boxes[0].score = Some(0.83);
        let back = read_coco_json(&write_coco_json(&m)).unwrap();
        assert_eq!(back.images[0].provenance, Provenance::Predicted);
        assert_eq!(back.images[0].boxes[0].score, Some(0.83));
        assert_eq!(back.detections(&back.vocabulary).unwrap().len(), 1);
    }

    fn manifest() -> impl Strategy<Value = DatasetManifest> {
        let bx = (0.0..900.0f64, 0.0..700.0f64, 0.0..300.0f64, 0.0..100.0f64, 0usize..6);
        proptest::collection::vec(proptest::collection::vec(bx, 0..8), 0..6).prop_map(|imgs| {
            let vocab = CategoryVocabulary::default();
            let mut m = DatasetManifest::new(vocab.clone());
            for (i, boxes) in imgs.into_iter().enumerate() {
                let mut img = AnnotatedImage::new(format!("img{i:03}"), format!("img{i:03}.jpg"), 1200, 800);
                img.split = Split::Unassigned;
                for (x, y, w, h, c) in boxes {
                    img.boxes.push(AnnotatedBox::new(
                        BoundingBox::from_xywh(x, y, w, h).unwrap(),
                        vocab.names()[c].clone(),
                    ));
                }
                m.images.push(img);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn round_trip(m in manifest()) {
            let text = write_coco_json(&m).to_json();
            let back = read_coco_json(&CocoDocument::from_json(&text).unwrap()).unwrap();
            prop_assert_eq!(back.images.len(), m.images.len());
            prop_assert_eq!(&back.vocabulary, &m.vocabulary);
            for (a, b) in m.images.iter().zip(&back.images) {
                prop_assert_eq!(&a.image_id, &b.image_id);
                prop_assert_eq!(a.boxes.len(), b.boxes.len());
                for (x, y) in a.boxes.iter().zip(&b.boxes) {
                    prop_assert_eq!(&x.category, &y.category);
                    for (p, q) in <[f64; 4]>::from(x.bbox).into_iter().zip(<[f64; 4]>::from(y.bbox)) {
                        prop_assert!((p - q).abs() < 1e-6);
                    }
                }
            }
        }
    }
}
