//! Deterministic synthetic datasets with prescribed per-category counts.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AnnotatedBox, AnnotatedImage, DatasetManifest, Split};
use crate::category::CategoryVocabulary;
use crate::geometry::BoundingBox;

/// Box counts per category and image counts per split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitTable {
    /// `(category, train boxes, test boxes)`
    pub rows: [(&'static str, usize, usize); 6],
    pub train_images: usize,
    pub test_images: usize,
}

/// The MNHN herbarium annotation counts.
pub const TABLE1: SplitTable = SplitTable {
    rows: [
        ("Leaf", 7886, 2051),
        ("Flower", 3179, 763),
        ("Fruit", 1047, 296),
        ("Seed", 4, 6),
        ("Stem", 3323, 961),
        ("Root", 78, 60),
    ],
    train_images: 498,
    test_images: 155,
};

pub const SYNTHETIC_WIDTH: u32 = 1200;
pub const SYNTHETIC_HEIGHT: u32 = 800;

/// Builds a manifest whose statistics match `table` exactly.
///
/// Category labels are shuffled and dealt round-robin over the split's
/// images; box geometry is random but always inside the image. The same
/// seed yields the same manifest.
pub fn synthetic_manifest(table: &SplitTable, seed: u64) -> DatasetManifest {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocabulary = CategoryVocabulary::new(table.rows.iter().map(|r| r.0))
        .expect("table categories are unique");
    let mut m = DatasetManifest::new(vocabulary);
    m.source = format!("synthetic seed={seed}");

    for (split, n_images, prefix) in [
        (Split::Train, table.train_images, "train"),
        (Split::Test, table.test_images, "test"),
    ] {
        let mut labels: Vec<&str> = table
            .rows
            .iter()
            .flat_map(|&(name, train, test)| {
                let n = if split == Split::Train { train } else { test };
                std::iter::repeat_n(name, n)
            })
            .collect();
        labels.shuffle(&mut rng);

        let mut images: Vec<AnnotatedImage> = (1..=n_images)
            .map(|i| {
                let id = format!("{prefix}_{i:04}");
                let mut img =
                    AnnotatedImage::new(&id, format!("{id}.jpg"), SYNTHETIC_WIDTH, SYNTHETIC_HEIGHT);
                img.split = split;
                img
            })
            .collect();
        if images.is_empty() {
            continue;
        }
        for (k, label) in labels.into_iter().enumerate() {
            let slot = k % images.len();
            images[slot].boxes.push(AnnotatedBox::new(random_box(&mut rng), label));
        }
        m.images.extend(images);
    }
    m
}

pub fn table1_manifest(seed: u64) -> DatasetManifest {
    synthetic_manifest(&TABLE1, seed)
}

/// Integer-coordinate box of at least 1x1 pixel inside the synthetic image.
fn random_box(rng: &mut impl Rng) -> BoundingBox {
    let (w, h) = (SYNTHETIC_WIDTH, SYNTHETIC_HEIGHT);
    let x0 = rng.random_range(0..w - 1);
    let y0 = rng.random_range(0..h - 1);
    let x1 = rng.random_range(x0 + 1..=(x0 + 300).min(w));
    let y1 = rng.random_range(y0 + 1..=(y0 + 300).min(h));
    BoundingBox::new(f64::from(x0), f64::from(y0), f64::from(x1), f64::from(y1))
        .expect("ordered integer corners")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_valid() {
        let a = table1_manifest(11);
        assert_eq!(a, table1_manifest(11));
        assert_ne!(a, table1_manifest(12));
        a.validate().unwrap();
        assert_eq!(a.images.len(), 653);
        assert_eq!(a.box_count(), 19654);
    }
}
