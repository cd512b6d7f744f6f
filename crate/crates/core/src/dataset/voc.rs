//! LabelImg / Pascal VOC annotation XML.
//!
//! Integer pixel coordinates are taken as continuous corner coordinates
//! without a +-1 adjustment, so `xmin=10, xmax=110` is a 100 px wide box.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AnnotatedBox, AnnotatedImage, DatasetError, DatasetManifest, Split};
use crate::category::CategoryVocabulary;
use crate::geometry::{clip, BoundingBox};

#[derive(Debug, Error)]
pub enum VocError {
    #[error("malformed annotation XML: {0}")]
    Malformed(String),
    #[error("annotation has no <filename>")]
    MissingFilename,
    #[error("annotation has no <size> block with width and height")]
    MissingSize,
    #[error("image size {width}x{height} must be positive")]
    InvalidSize { width: u32, height: u32 },
    #[error("object {index}: <{field}> value {value:?} is not a finite number")]
    InvalidNumber {
        index: usize,
        field: &'static str,
        value: String,
    },
    #[error("object {index} ({label}): inverted box, xmin {xmin} ymin {ymin} xmax {xmax} ymax {ymax}")]
    InvertedBox {
        index: usize,
        label: String,
        xmin: f64,
        ymin: f64,
        xmax: f64,
        ymax: f64,
    },
    #[error("object {index} has no <bndbox>")]
    MissingBox { index: usize },
    #[error("unknown category label {0:?}")]
    UnknownCategory(String),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VocOptions {
    /// Append unseen labels to the vocabulary instead of rejecting them.
    pub allow_new_categories: bool,
}

#[derive(Deserialize)]
struct XmlAnnotation {
    filename: Option<String>,
    size: Option<XmlSizeIn>,
    #[serde(default)]
    object: Vec<XmlObjectIn>,
}

#[derive(Deserialize)]
struct XmlSizeIn {
    width: Option<String>,
    height: Option<String>,
}

#[derive(Deserialize)]
struct XmlObjectIn {
    name: String,
    bndbox: Option<XmlBndBox>,
}

#[derive(Serialize, Deserialize)]
struct XmlBndBox {
    xmin: String,
    ymin: String,
    xmax: String,
    ymax: String,
}

#[derive(Serialize)]
struct XmlAnnotationOut<'a> {
    folder: &'a str,
    filename: &'a str,
    size: XmlSizeOut,
    segmented: u8,
    object: Vec<XmlObjectOut<'a>>,
}

#[derive(Serialize)]
struct XmlSizeOut {
    width: u32,
    height: u32,
    depth: u8,
}

#[derive(Serialize)]
struct XmlObjectOut<'a> {
    name: &'a str,
    pose: &'a str,
    truncated: u8,
    difficult: u8,
    bndbox: XmlBndBox,
}

fn parse_dim(v: Option<&String>) -> Option<u32> {
    let v = v?.trim();
    v.parse::<u32>()
        .ok()
        .or_else(|| v.parse::<f64>().ok().filter(|f| f.is_finite() && *f >= 0.0).map(|f| f as u32))
}

fn parse_coord(index: usize, field: &'static str, value: &str) -> Result<f64, VocError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| VocError::InvalidNumber {
            index,
            field,
            value: value.to_owned(),
        })
}

fn file_stem(name: &str) -> String {
    Path::new(name)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| name.to_owned())
}

/// Parses one annotation document into an image with split `unassigned` and
/// provenance `manual`. The image id is the file stem of `<filename>`.
pub fn parse_voc_xml(
    xml: &str,
    vocabulary: &mut CategoryVocabulary,
    opts: VocOptions,
) -> Result<AnnotatedImage, VocError> {
    let doc: XmlAnnotation =
        quick_xml::de::from_str(xml).map_err(|e| VocError::Malformed(e.to_string()))?;
    let file_name = doc
        .filename
        .map(|f| f.trim().to_owned())
        .filter(|f| !f.is_empty())
        .ok_or(VocError::MissingFilename)?;
    let size = doc.size.ok_or(VocError::MissingSize)?;
    let (width, height) = match (parse_dim(size.width.as_ref()), parse_dim(size.height.as_ref())) {
        (Some(w), Some(h)) => (w, h),
        _ => return Err(VocError::MissingSize),
    };
    if width == 0 || height == 0 {
        return Err(VocError::InvalidSize { width, height });
    }

    let mut image = AnnotatedImage::new(file_stem(&file_name), file_name, width, height);
    for (index, obj) in doc.object.into_iter().enumerate() {
        let label = obj.name.trim().to_owned();
        if !vocabulary.contains(&label) {
            if !opts.allow_new_categories {
                return Err(VocError::UnknownCategory(label));
            }
            vocabulary
                .push(label.clone())
                .map_err(|e| VocError::Malformed(e.to_string()))?;
        }
        let bnd = obj.bndbox.ok_or(VocError::MissingBox { index })?;
        let xmin = parse_coord(index, "xmin", &bnd.xmin)?;
        let ymin = parse_coord(index, "ymin", &bnd.ymin)?;
        let xmax = parse_coord(index, "xmax", &bnd.xmax)?;
        let ymax = parse_coord(index, "ymax", &bnd.ymax)?;
        let bbox = BoundingBox::new(xmin, ymin, xmax, ymax).map_err(|_| VocError::InvertedBox {
            index,
            label: label.clone(),
            xmin,
            ymin,
            xmax,
            ymax,
        })?;
        image.boxes.push(AnnotatedBox::new(
            clip(&bbox, f64::from(width), f64::from(height)),
            label,
        ));
    }
    Ok(image)
}

fn coord_text(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        v.to_string()
    }
}

/// Serializes an image in the LabelImg layout. Scores are not representable
/// and are dropped.
pub fn write_voc_xml(image: &AnnotatedImage) -> String {
    let doc = XmlAnnotationOut {
        folder: "images",
        filename: &image.file_name,
        size: XmlSizeOut {
            width: image.width,
            height: image.height,
            depth: 3,
        },
        segmented: 0,
        object: image
            .boxes
            .iter()
            .map(|b| XmlObjectOut {
                name: &b.category,
                pose: "Unspecified",
                truncated: 0,
                difficult: 0,
                bndbox: XmlBndBox {
                    xmin: coord_text(b.bbox.x_min),
                    ymin: coord_text(b.bbox.y_min),
                    xmax: coord_text(b.bbox.x_max),
                    ymax: coord_text(b.bbox.y_max),
                },
            })
            .collect(),
    };
    let mut out = String::new();
    let mut ser = quick_xml::se::Serializer::with_root(&mut out, Some("annotation"))
        .expect("static root name is valid");
    ser.indent(' ', 4);
    doc.serialize(ser).expect("annotation serialization cannot fail");
    out.push('\n');
    out
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_owned(),
        source,
    }
}

fn read_id_list(path: &Path) -> Result<Vec<String>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.split_whitespace().next().unwrap_or(l).to_owned())
        .collect())
}

/// Reads a single annotation file, a directory of them, or a VOC root that
/// contains `Annotations/`.
///
/// Split membership comes from `train.txt` / `test.txt` in `image_sets`, or
/// in `<root>/ImageSets/Main` when that exists; unlisted images stay
/// unassigned. Files are read in name order.
pub fn read_voc_dataset(
    path: &Path,
    image_sets: Option<&Path>,
    vocabulary: CategoryVocabulary,
    opts: VocOptions,
) -> Result<DatasetManifest, DatasetError> {
    let mut vocabulary = vocabulary;
    let (files, default_sets): (Vec<PathBuf>, Option<PathBuf>) = if path.is_file() {
        (vec![path.to_owned()], None)
    } else {
        let (dir, sets) = if path.join("Annotations").is_dir() {
            (path.join("Annotations"), Some(path.join("ImageSets").join("Main")))
        } else {
            (path.to_owned(), None)
        };
        let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(io_err(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && p.extension()
                        .is_some_and(|e| e.eq_ignore_ascii_case("xml"))
            })
            .collect();
        files.sort();
        (files, sets)
    };

    let mut manifest = DatasetManifest::new(CategoryVocabulary::default());
    manifest.source = path.display().to_string();
    for file in &files {
        let text = std::fs::read_to_string(file).map_err(io_err(file))?;
        let image = parse_voc_xml(&text, &mut vocabulary, opts).map_err(|source| DatasetError::Voc {
            path: file.clone(),
            source,
        })?;
        manifest.images.push(image);
    }
    manifest.vocabulary = vocabulary;

    let sets_dir = image_sets.map(Path::to_owned).or(default_sets);
    if let Some(dir) = sets_dir.filter(|d| d.is_dir()) {
        let mut splits: HashMap<String, Split> = HashMap::new();
        for (name, split) in [("train.txt", Split::Train), ("test.txt", Split::Test)] {
            let list = dir.join(name);
            if list.is_file() {
                for id in read_id_list(&list)? {
                    splits.insert(id, split);
                }
            }
        }
        for img in &mut manifest.images {
            if let Some(s) = splits.get(&img.image_id) {
                img.split = *s;
            }
        }
    }
    manifest.validate()?;
    Ok(manifest)
}

/// Writes `Annotations/<image_id>.xml` per image plus
/// `ImageSets/Main/{train,test}.txt` under `root`.
pub fn write_voc_dataset(m: &DatasetManifest, root: &Path) -> Result<(), DatasetError> {
    let ann = root.join("Annotations");
    let sets = root.join("ImageSets").join("Main");
    std::fs::create_dir_all(&ann).map_err(io_err(&ann))?;
    std::fs::create_dir_all(&sets).map_err(io_err(&sets))?;
    let mut train = String::new();
    let mut test = String::new();
    for img in &m.images {
        let path = ann.join(format!("{}.xml", img.image_id));
        std::fs::write(&path, write_voc_xml(img)).map_err(io_err(&path))?;
        match img.split {
            Split::Train => train.push_str(&format!("{}\n", img.image_id)),
            Split::Test => test.push_str(&format!("{}\n", img.image_id)),
            Split::Unassigned => {}
        }
    }
    for (name, body) in [("train.txt", train), ("test.txt", test)] {
        let path = sets.join(name);
        std::fs::write(&path, body).map_err(io_err(&path))?;
    }
    Ok(())
}
