//! Encoding a ground-truth box relative to an anchor and decoding it back.

use organdet::geometry::BoundingBox;
use organdet::rpn::{decode_deltas, encode_deltas, BoxDeltas, MAX_LOG_SCALE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let anchor = BoundingBox::from_center(100.0, 100.0, 64.0, 64.0)?;
    let gt = BoundingBox::new(80.0, 90.0, 150.0, 130.0)?;
    let d = encode_deltas(&anchor, &gt)?;
    println!("deltas {d:?}");
    println!("decoded {:?}", decode_deltas(&anchor, &d)?);

    // huge log-scale deltas are clamped before exponentiation
    let wild = BoxDeltas { tw: 50.0, ..BoxDeltas::ZERO };
    let b = decode_deltas(&anchor, &wild)?;
    println!("tw clamp {MAX_LOG_SCALE:.4}: width {:.1}", b.width());
    Ok(())
}
