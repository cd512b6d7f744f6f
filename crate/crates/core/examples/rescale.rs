//! Aspect-preserving rescale of a scanned sheet and its boxes to the network input size.

use organdet::dataset::rescale_manifest;
use organdet::geometry::{fit_rescale, BoundingBox};
use organdet::{AnnotatedBox, AnnotatedImage, DatasetManifest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = fit_rescale(5100, 3500, 1200, 800);
    println!(
        "5100x3500 -> {}x{} (scale {:.7})",
        t.output_width, t.output_height, t.scale
    );

    let mut manifest = DatasetManifest::default();
    let mut sheet = AnnotatedImage::new("sheet", "sheet.jpg", 5100, 3500);
    sheet.boxes.push(AnnotatedBox::new(BoundingBox::new(1000.0, 700.0, 1700.0, 1400.0)?, "Leaf"));
    manifest.images.push(sheet);

    let small = rescale_manifest(&manifest, 1200, 800);
    let img = &small.images[0];
    println!("{}x{}: {:?}", img.width, img.height, img.boxes[0].bbox);
    Ok(())
}
