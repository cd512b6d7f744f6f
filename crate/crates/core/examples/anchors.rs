//! Multi-scale anchor tiling and foreground/background labelling.

use organdet::geometry::BoundingBox;
use organdet::rpn::{generate_anchors, label_anchors, AnchorConfig, AnchorLabel, ProposalConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = AnchorConfig::default();
    let grids = cfg.grid_sizes_for_image(1200, 800);
    let anchors = generate_anchors(&cfg, &grids)?;
    println!("{} anchors for a 1200x800 image", anchors.len());
    for (level, (rows, cols)) in grids.iter().enumerate() {
        println!(
            "  level {level}: stride {:>3}, scale {:>4}, grid {rows}x{cols}",
            cfg.strides[level], cfg.scales[level]
        );
    }

    // one cell, one anchor per ratio
    let small = AnchorConfig {
        scales: vec![64.0],
        ratios: vec![0.5, 1.0, 2.0],
        strides: vec![16],
        center_offset: 0.5,
    };
    for a in generate_anchors(&small, &[(1, 1)])? {
        let b = a.bbox;
        println!("  {:.3} x {:.3} at {:?}", b.width(), b.height(), b.center());
    }

    let leaf = BoundingBox::new(100.0, 120.0, 164.0, 184.0)?;
    let labels = label_anchors(&anchors, &[leaf], &ProposalConfig::training(2000))?;
    let fg = labels.iter().filter(|l| l.is_foreground()).count();
    let ignored = labels.iter().filter(|l| **l == AnchorLabel::Ignore).count();
    println!("{fg} foreground, {ignored} ignored, rest background");
    Ok(())
}
