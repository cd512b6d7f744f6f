//! Parsing a LabelImg/VOC annotation and converting it to COCO JSON.

use organdet::dataset::{parse_voc_xml, read_coco_json, write_coco_json, write_voc_xml, VocOptions};
use organdet::{CategoryVocabulary, DatasetManifest};

const XML: &str = r#"<annotation>
  <filename>herbarium_0042.jpg</filename>
  <size><width>1200</width><height>800</height><depth>3</depth></size>
  <object>
    <name>Leaf</name>
    <bndbox><xmin>100</xmin><ymin>120</ymin><xmax>260</xmax><ymax>300</ymax></bndbox>
  </object>
  <object>
    <name>Flower</name>
    <bndbox><xmin>400</xmin><ymin>50</ymin><xmax>470</xmax><ymax>110</ymax></bndbox>
  </object>
</annotation>"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut vocab = CategoryVocabulary::organs();
    let image = parse_voc_xml(XML, &mut vocab, VocOptions::default())?;
    println!("{}: {} boxes", image.image_id, image.boxes.len());

    let mut manifest = DatasetManifest::new(vocab);
    manifest.images.push(image);
    let coco = write_coco_json(&manifest);
    println!("{}", coco.to_json());

    let back = read_coco_json(&coco)?;
    println!("round trip:\n{}", write_voc_xml(&back.images[0]));
    Ok(())
}
