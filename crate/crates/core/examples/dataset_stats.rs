//! Per-category, per-split box counts for a synthetic dataset with the herbarium split.

use organdet::dataset::synthetic::table1_manifest;
use organdet::dataset::{compute_stats, render_stats};

fn main() {
    let manifest = table1_manifest(2020);
    print!("{}", render_stats(&compute_stats(&manifest)));
}
