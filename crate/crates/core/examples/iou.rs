//! Box areas, intersection-over-union and clipping.

use organdet::geometry::{clip, iou, BoundingBox};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0)?;
    let b = BoundingBox::new(5.0, 5.0, 15.0, 15.0)?;
    let c = BoundingBox::from_xywh(20.0, 20.0, 4.0, 4.0)?;

    println!("area(a) = {}", a.area());
    println!("iou(a, b) = {:.6}", iou(&a, &b)); // 25 / 175
    println!("iou(a, a) = {}", iou(&a, &a));
    println!("iou(a, c) = {}", iou(&a, &c));

    let wide = BoundingBox::new(-5.0, 2.0, 1300.0, 40.0)?;
    println!("clip to 1200x800: {:?}", clip(&wide, 1200.0, 800.0));
    Ok(())
}
