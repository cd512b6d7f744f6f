//! RoI max pooling of a region of a feature grid onto a fixed k x k output.

use organdet::geometry::BoundingBox;
use organdet::rpn::{roi_max_pool, FeatureGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (h, w) = (6, 8);
    let values = (0..h * w).map(|i| i as f64).collect();
    let grid = FeatureGrid::new(h, w, values)?;

    let roi = BoundingBox::new(1.0, 1.0, 7.0, 5.0)?;
    let pooled = roi_max_pool(&grid, &roi, 2)?;
    println!("2x2 pool of {roi:?}:");
    for row in pooled.rows() {
        println!("  {row:?}");
    }

    // regions smaller than the output still cover at least one cell per bin
    let tiny = BoundingBox::new(3.2, 2.1, 3.9, 2.8)?;
    let pooled = roi_max_pool(&grid, &tiny, 3)?;
    println!("3x3 pool of a sub-cell region, max {}", pooled.max());
    Ok(())
}
