//! Human verification of predicted boxes as an event-sourced store.
//!
//! The store owns the initial manifest, a working copy, one status per image
//! and an append-only log of correction events. Replaying the log over the
//! initial manifest reproduces the working copy and statuses exactly.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::category::{color_for, DisplayColor};
use crate::dataset::{
    compute_stats, AnnotatedBox, AnnotatedImage, DatasetError, DatasetManifest, DatasetStats,
    Provenance, Split,
};
use crate::geometry::BoundingBox;

/// Version stamped on every document the store hands out.
pub const REVIEW_API_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReviewStatus {
    Unverified,
    Verified,
    Corrected,
}

impl ReviewStatus {
    pub const ALL: [ReviewStatus; 3] = [
        ReviewStatus::Unverified,
        ReviewStatus::Verified,
        ReviewStatus::Corrected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReviewStatus::Unverified => "unverified",
            ReviewStatus::Verified => "verified",
            ReviewStatus::Corrected => "corrected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.as_str() == s)
    }

    /// Whether `self -> next` is an allowed transition. Staying put is allowed.
    pub fn can_become(self, next: ReviewStatus) -> bool {
        use ReviewStatus::*;
        matches!(
            (self, next),
            (Unverified, _) | (Verified, Verified | Corrected) | (Corrected, Corrected)
        )
    }

    fn provenance(self) -> Option<Provenance> {
        match self {
            ReviewStatus::Unverified => None,
            ReviewStatus::Verified => Some(Provenance::Verified),
            ReviewStatus::Corrected => Some(Provenance::Corrected),
        }
    }
}

/// A box as the reviewer saw it: geometry plus category, without score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSnapshot {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub category: String,
}

impl BoxSnapshot {
    pub fn new(bbox: BoundingBox, category: impl Into<String>) -> Self {
        Self {
            bbox,
            category: category.into(),
        }
    }

    fn of(b: &AnnotatedBox) -> Self {
        Self::new(b.bbox, b.category.clone())
    }
}

/// One reviewer action on one image.
///
/// `index` addresses the image's current box list; the `before` snapshot
/// must match the box at that index or the edit is rejected as stale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "lowercase")]
pub enum Correction {
    Add {
        after: BoxSnapshot,
    },
    Delete {
        index: usize,
        before: BoxSnapshot,
    },
    Move {
        index: usize,
        before: BoxSnapshot,
        after: BoxSnapshot,
    },
    Relabel {
        index: usize,
        before: BoxSnapshot,
        after: BoxSnapshot,
    },
    Approve,
}

impl Correction {
    pub fn is_edit(&self) -> bool {
        !matches!(self, Correction::Approve)
    }
}

/// Body of a correction submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRequest {
    /// Resubmitting a key already applied to the same image is a no-op.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    #[serde(default)]
    pub reviewer: String,
    #[serde(flatten)]
    pub correction: Correction,
}

impl CorrectionRequest {
    pub fn new(correction: Correction) -> Self {
        Self {
            idempotency_key: None,
            reviewer: String::new(),
            correction,
        }
    }

    pub fn with_key(mut self, key: impl Into<String>) -> Self {
        self.idempotency_key = Some(key.into());
        self
    }

    pub fn by(mut self, reviewer: impl Into<String>) -> Self {
        self.reviewer = reviewer.into();
        self
    }
}

/// An applied correction as recorded in the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionEvent {
    pub seq: u64,
    pub image_id: String,
    pub timestamp_ms: u64,
    #[serde(default)]
    pub reviewer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub idempotency_key: Option<String>,
    #[serde(flatten)]
    pub correction: Correction,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("unknown image {0:?}")]
    UnknownImage(String),
    #[error("box {index} of image {image_id:?} changed since it was read")]
    Conflict { image_id: String, index: usize },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("category {0:?} is not in the vocabulary")]
    UnknownCategory(String),
    #[error("malformed correction: {0}")]
    Malformed(String),
    #[error("event log {path}: line {line}: {reason}")]
    CorruptLog {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ReviewError {
    pub fn is_conflict(&self) -> bool {
        matches!(self, ReviewError::Conflict { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApplyOutcome {
    pub event: CorrectionEvent,
    /// The idempotency key had already been applied; nothing changed.
    pub duplicate: bool,
    pub status: ReviewStatus,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImageFilter {
    #[serde(default)]
    pub status: Option<ReviewStatus>,
    #[serde(default)]
    pub category: Option<String>,
    #[serde(default)]
    pub split: Option<Split>,
    /// 1-based; 0 is treated as 1.
    #[serde(default)]
    pub page: usize,
    /// 0 means [`DEFAULT_PAGE_SIZE`].
    #[serde(default)]
    pub page_size: usize,
}

pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSummary {
    pub image_id: String,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub split: Split,
    pub status: ReviewStatus,
    pub box_count: usize,
    pub boxes_by_category: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePage {
    pub version: u32,
    pub page: usize,
    pub page_size: usize,
    /// Matching images over all pages.
    pub total: usize,
    pub images: Vec<ImageSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxView {
    pub index: usize,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub category: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub color: Option<DisplayColor>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageAnnotations {
    pub version: u32,
    pub image_id: String,
    pub file_name: String,
    pub width: u32,
    pub height: u32,
    pub split: Split,
    pub provenance: Provenance,
    pub status: ReviewStatus,
    pub boxes: Vec<BoxView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewStats {
    pub version: u32,
    pub images: usize,
    pub unverified: usize,
    pub verified: usize,
    pub corrected: usize,
    pub events: usize,
    pub boxes: DatasetStats,
}

#[derive(Debug)]
pub struct ReviewStore {
    initial: DatasetManifest,
    manifest: DatasetManifest,
    statuses: Vec<ReviewStatus>,
    log: Vec<CorrectionEvent>,
    by_id: HashMap<String, usize>,
    /// `(image_id, idempotency key)` to log position.
    keys: HashMap<(String, String), usize>,
    log_file: Option<(PathBuf, File)>,
}

impl ReviewStore {
    /// In-memory store over a validated manifest, every image unverified.
    pub fn new(manifest: DatasetManifest) -> Result<Self, ReviewError> {
        manifest.validate()?;
        let by_id = manifest
            .images
            .iter()
            .enumerate()
            .map(|(i, img)| (img.image_id.clone(), i))
            .collect();
        Ok(Self {
            statuses: vec![ReviewStatus::Unverified; manifest.images.len()],
            initial: manifest.clone(),
            manifest,
            log: Vec::new(),
            by_id,
            keys: HashMap::new(),
            log_file: None,
        })
    }

    /// Rebuilds the state reached by applying `events` to `initial`.
    pub fn replay(
        initial: DatasetManifest,
        events: impl IntoIterator<Item = CorrectionEvent>,
    ) -> Result<Self, ReviewError> {
        let mut store = Self::new(initial)?;
        for e in events {
            store.commit(e)?;
        }
        Ok(store)
    }

    /// Store backed by a JSON-lines event log. Existing events are replayed;
    /// new ones are appended and synced before they take effect in memory.
    pub fn open(initial: DatasetManifest, log_path: &Path) -> Result<Self, ReviewError> {
        let events = if log_path.exists() {
            read_log(log_path)?
        } else {
            Vec::new()
        };
        let mut store = Self::replay(initial, events)?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(log_path)
            .map_err(|source| ReviewError::Io {
                path: log_path.to_owned(),
                source,
            })?;
        store.log_file = Some((log_path.to_owned(), file));
        Ok(store)
    }

    pub fn initial(&self) -> &DatasetManifest {
        &self.initial
    }

    pub fn manifest(&self) -> &DatasetManifest {
        &self.manifest
    }

    pub fn log(&self) -> &[CorrectionEvent] {
        &self.log
    }

    pub fn status(&self, image_id: &str) -> Option<ReviewStatus> {
        self.by_id.get(image_id).map(|&i| self.statuses[i])
    }

    /// `(image_id, status)` in manifest order.
    pub fn statuses(&self) -> impl Iterator<Item = (&str, ReviewStatus)> {
        self.manifest
            .images
            .iter()
            .zip(&self.statuses)
            .map(|(img, &s)| (img.image_id.as_str(), s))
    }

    fn slot(&self, image_id: &str) -> Result<usize, ReviewError> {
        self.by_id
            .get(image_id)
            .copied()
            .ok_or_else(|| ReviewError::UnknownImage(image_id.to_owned()))
    }

    /// Validates and applies one correction, stamping it with `timestamp_ms`.
    pub fn apply(
        &mut self,
        image_id: &str,
        request: CorrectionRequest,
        timestamp_ms: u64,
    ) -> Result<ApplyOutcome, ReviewError> {
        let slot = self.slot(image_id)?;
        if let Some(&prev) = request
            .idempotency_key
            .as_ref()
            .and_then(|k| self.keys.get(&(image_id.to_owned(), k.clone())))
        {
            return Ok(ApplyOutcome {
                event: self.log[prev].clone(),
                duplicate: true,
                status: self.statuses[slot],
            });
        }
        let event = CorrectionEvent {
            seq: self.log.len() as u64 + 1,
            image_id: image_id.to_owned(),
            timestamp_ms,
            reviewer: request.reviewer,
            idempotency_key: request.idempotency_key,
            correction: request.correction,
        };
        self.check(slot, &event.correction)?;
        if let Some((path, file)) = &mut self.log_file {
            let mut line = serde_json::to_string(&event).expect("event serialization cannot fail");
            line.push('\n');
            file.write_all(line.as_bytes())
                .and_then(|()| file.sync_data())
                .map_err(|source| ReviewError::Io {
                    path: path.clone(),
                    source,
                })?;
        }
        self.commit(event.clone())?;
        Ok(ApplyOutcome {
            event,
            duplicate: false,
            status: self.statuses[slot],
        })
    }

    /// Rejects corrections that would break the manifest or act on stale data.
    fn check(&self, slot: usize, c: &Correction) -> Result<(), ReviewError> {
        let img = &self.manifest.images[slot];
        let stale = |index: usize, before: &BoxSnapshot| -> Result<(), ReviewError> {
            match img.boxes.get(index) {
                Some(b) if BoxSnapshot::of(b) == *before => Ok(()),
                _ => Err(ReviewError::Conflict {
                    image_id: img.image_id.clone(),
                    index,
                }),
            }
        };
        match c {
            Correction::Approve => Ok(()),
            Correction::Add { after } => self.check_snapshot(img, after),
            Correction::Delete { index, before } => stale(*index, before),
            Correction::Move {
                index,
                before,
                after,
            } => {
                if before.category != after.category {
                    return Err(ReviewError::Malformed(
                        "move must keep the category; use relabel".into(),
                    ));
                }
                self.check_snapshot(img, after)?;
                stale(*index, before)
            }
            Correction::Relabel {
                index,
                before,
                after,
            } => {
                if before.bbox != after.bbox {
                    return Err(ReviewError::Malformed(
                        "relabel must keep the box; use move".into(),
                    ));
                }
                self.check_snapshot(img, after)?;
                stale(*index, before)
            }
        }
    }

    fn check_snapshot(&self, img: &AnnotatedImage, s: &BoxSnapshot) -> Result<(), ReviewError> {
        s.bbox
            .validate()
            .map_err(|e| ReviewError::InvalidBox(e.to_string()))?;
        if !s.bbox.is_within(f64::from(img.width), f64::from(img.height)) {
            return Err(ReviewError::InvalidBox(format!(
                "{:?} lies outside the {}x{} image",
                <[f64; 4]>::from(s.bbox),
                img.width,
                img.height
            )));
        }
        if !self.manifest.vocabulary.contains(&s.category) {
            return Err(ReviewError::UnknownCategory(s.category.clone()));
        }
        Ok(())
    }

    /// Applies an event that is known to be valid for the current state.
    fn commit(&mut self, event: CorrectionEvent) -> Result<(), ReviewError> {
        let slot = self.slot(&event.image_id)?;
        if event.seq != self.log.len() as u64 + 1 {
            return Err(ReviewError::Malformed(format!(
                "event seq {} out of order, expected {}",
                event.seq,
                self.log.len() + 1
            )));
        }
        self.check(slot, &event.correction)?;
        let boxes = &mut self.manifest.images[slot].boxes;
        match &event.correction {
            Correction::Approve => {}
            Correction::Add { after } => boxes.push(AnnotatedBox::new(after.bbox, &after.category)),
            Correction::Delete { index, .. } => {
                boxes.remove(*index);
            }
            Correction::Move { index, after, .. } | Correction::Relabel { index, after, .. } => {
                boxes[*index] = AnnotatedBox::new(after.bbox, &after.category);
            }
        }
        let status = &mut self.statuses[slot];
        *status = match (&event.correction, *status) {
            (Correction::Approve, ReviewStatus::Unverified) => ReviewStatus::Verified,
            (Correction::Approve, s) => s,
            _ => ReviewStatus::Corrected,
        };
        if let Some(k) = &event.idempotency_key {
            self.keys
                .insert((event.image_id.clone(), k.clone()), self.log.len());
        }
        self.log.push(event);
        Ok(())
    }

    /// One page of image summaries ordered by `image_id`.
    pub fn list_images(&self, filter: &ImageFilter) -> ImagePage {
        let page = filter.page.max(1);
        let page_size = match filter.page_size {
            0 => DEFAULT_PAGE_SIZE,
            n => n.min(MAX_PAGE_SIZE),
        };
        let mut matching: Vec<usize> = (0..self.manifest.images.len())
            .filter(|&i| {
                let img = &self.manifest.images[i];
                filter.status.is_none_or(|s| self.statuses[i] == s)
                    && filter.split.is_none_or(|s| img.split == s)
                    && filter
                        .category
                        .as_ref()
                        .is_none_or(|c| img.boxes.iter().any(|b| &b.category == c))
            })
            .collect();
        matching.sort_by(|&a, &b| {
            self.manifest.images[a]
                .image_id
                .cmp(&self.manifest.images[b].image_id)
        });
        let images = matching
            .iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .map(|&i| self.summary(i))
            .collect();
        ImagePage {
            version: REVIEW_API_VERSION,
            page,
            page_size,
            total: matching.len(),
            images,
        }
    }

    fn summary(&self, slot: usize) -> ImageSummary {
        let img = &self.manifest.images[slot];
        let mut boxes_by_category = BTreeMap::new();
        for b in &img.boxes {
            *boxes_by_category.entry(b.category.clone()).or_insert(0) += 1;
        }
        ImageSummary {
            image_id: img.image_id.clone(),
            file_name: img.file_name.clone(),
            width: img.width,
            height: img.height,
            split: img.split,
            status: self.statuses[slot],
            box_count: img.boxes.len(),
            boxes_by_category,
        }
    }

    /// Image metadata and boxes with their display colors.
    pub fn annotations(&self, image_id: &str) -> Result<ImageAnnotations, ReviewError> {
        let slot = self.slot(image_id)?;
        let img = &self.manifest.images[slot];
        Ok(ImageAnnotations {
            version: REVIEW_API_VERSION,
            image_id: img.image_id.clone(),
            file_name: img.file_name.clone(),
            width: img.width,
            height: img.height,
            split: img.split,
            provenance: img.provenance,
            status: self.statuses[slot],
            boxes: img
                .boxes
                .iter()
                .enumerate()
                .map(|(index, b)| BoxView {
                    index,
                    bbox: b.bbox,
                    category: b.category.clone(),
                    score: b.score,
                    color: color_for(&b.category),
                })
                .collect(),
        })
    }

    /// Reviewed images ready for retraining: only `statuses` are included,
    /// scores are dropped and provenance reflects the review outcome.
    pub fn export(&self, statuses: &[ReviewStatus]) -> DatasetManifest {
        let mut out = DatasetManifest::new(self.manifest.vocabulary.clone());
        out.source = if self.manifest.source.is_empty() {
            "review export".to_owned()
        } else {
            format!("review export of {}", self.manifest.source)
        };
        let mut slots: Vec<usize> = (0..self.manifest.images.len())
            .filter(|&i| statuses.contains(&self.statuses[i]))
            .collect();
        slots.sort_by(|&a, &b| {
            self.manifest.images[a]
                .image_id
                .cmp(&self.manifest.images[b].image_id)
        });
        for i in slots {
            let mut img = self.manifest.images[i].clone();
            if let Some(p) = self.statuses[i].provenance() {
                img.provenance = p;
            }
            for b in &mut img.boxes {
                b.score = None;
            }
            out.images.push(img);
        }
        out
    }

    pub fn stats(&self) -> ReviewStats {
        let count = |s| self.statuses.iter().filter(|&&x| x == s).count();
        ReviewStats {
            version: REVIEW_API_VERSION,
            images: self.statuses.len(),
            unverified: count(ReviewStatus::Unverified),
            verified: count(ReviewStatus::Verified),
            corrected: count(ReviewStatus::Corrected),
            events: self.log.len(),
            boxes: compute_stats(&self.manifest),
        }
    }
}

/// Reads a JSON-lines event log.
pub fn read_log(path: &Path) -> Result<Vec<CorrectionEvent>, ReviewError> {
    let io = |source| ReviewError::Io {
        path: path.to_owned(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut events = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line).map_err(|e| ReviewError::CorruptLog {
            path: path.to_owned(),
            line: n + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    Ok(events)
}
