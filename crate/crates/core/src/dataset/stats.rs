use serde::{Deserialize, Serialize};

use super::{DatasetManifest, Split};
use crate::table::markdown;

/// Counts per split; `total` covers every split including unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub test: usize,
    pub unassigned: usize,
    pub total: usize,
}

impl SplitCounts {
    fn add(&mut self, split: Split, n: usize) {
        match split {
            Split::Train => self.train += n,
            Split::Test => self.test += n,
            Split::Unassigned => self.unassigned += n,
        }
        self.total += n;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub category: String,
    pub counts: SplitCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    /// One entry per vocabulary category, in vocabulary order.
    pub categories: Vec<CategoryCounts>,
    pub totals: SplitCounts,
    pub images: SplitCounts,
    /// Total boxes over total images; 0 for an empty manifest.
    pub mean_boxes_per_image: f64,
}

pub fn compute_stats(m: &DatasetManifest) -> DatasetStats {
    let mut categories: Vec<CategoryCounts> = m
        .vocabulary
        .names()
        .iter()
        .map(|n| CategoryCounts {
            category: n.clone(),
            counts: SplitCounts::default(),
        })
        .collect();
    let mut totals = SplitCounts::default();
    let mut images = SplitCounts::default();
    for img in &m.images {
        images.add(img.split, 1);
        for b in &img.boxes {
            // boxes outside the vocabulary only count towards the totals
            if let Some(id) = m.vocabulary.id_of(&b.category) {
                categories[id.0 as usize - 1].counts.add(img.split, 1);
            }
            totals.add(img.split, 1);
        }
    }
    let mean_boxes_per_image = if images.total == 0 {
        0.0
    } else {
        totals.total as f64 / images.total as f64
    };
    DatasetStats {
        categories,
        totals,
        images,
        mean_boxes_per_image,
    }
}

/// Renders category-by-split box counts as a Markdown table followed by the
/// mean boxes per image. An unassigned column appears only when needed.
pub fn render_stats(stats: &DatasetStats) -> String {
    let with_unassigned = stats.images.unassigned > 0;
    let cols = |c: &SplitCounts| {
        let mut v = vec![c.train.to_string(), c.test.to_string()];
        if with_unassigned {
            v.push(c.unassigned.to_string());
        }
        v.push(c.total.to_string());
        v
    };
    let img = &stats.images;
    let mut header = vec![
        "Category".to_owned(),
        format!("Training subset ({} images)", img.train),
        format!("Test subset ({} images)", img.test),
    ];
    if with_unassigned {
        header.push(format!("Unassigned ({} images)", img.unassigned));
    }
    header.push(format!("Complete dataset ({} images)", img.total));

    let mut rows: Vec<Vec<String>> = stats
        .categories
        .iter()
        .map(|c| {
            let mut r = vec![c.category.clone()];
            r.extend(cols(&c.counts));
            r
        })
        .collect();
    let mut total = vec!["Total".to_owned()];
    total.extend(cols(&stats.totals));
    rows.push(total);

    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut out = markdown(&header, &rows);
    out.push_str(&format!(
        "\nMean bounding boxes per image: {:.1}\n",
        stats.mean_boxes_per_image
    ));
    out
}
