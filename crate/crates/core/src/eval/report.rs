use serde::{Deserialize, Serialize};

use super::{
    ap_coco_from_curve, ap_voc, match_detections, pr_curve, Detection, GroundTruthBox,
    COCO_IOU_THRESHOLDS,
};
use crate::category::CategoryVocabulary;
use crate::table::markdown;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: String,
    pub gt_count: usize,
    /// COCO AP averaged over IoU 0.50:0.95, 0-100. `None` without ground truth.
    pub ap: Option<f64>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    /// VOC 2012 AP at IoU 0.5, 0-1.
    pub ap50_voc: Option<f64>,
}

/// Headline metrics plus one row per vocabulary category.
///
/// VOC AP is on a 0-1 scale, COCO metrics on 0-100. Headline values are
/// means over the categories that have ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub score_threshold: f64,
    pub ap50_voc: f64,
    pub ap50_coco: f64,
    pub ap75: f64,
    pub ap: f64,
    pub per_category: Vec<CategoryReport>,
}

/// Scores detections against ground truth for every vocabulary category.
///
/// Detections scoring below `score_threshold` are dropped before matching.
pub fn evaluate(
    dets: &[Detection],
    gts: &[GroundTruthBox],
    vocabulary: &CategoryVocabulary,
    score_threshold: f64,
) -> EvalReport {
    let kept: Vec<Detection> = dets
        .iter()
        .filter(|d| d.score >= score_threshold)
        .cloned()
        .collect();

    let per_category: Vec<CategoryReport> = vocabulary
        .iter()
        .map(|(id, name)| {
            let coco: Vec<Option<f64>> = COCO_IOU_THRESHOLDS
                .iter()
                .map(|&t| ap_coco_from_curve(&pr_curve(&match_detections(&kept, gts, t, id))))
                .collect();
            let voc = ap_voc(&pr_curve(&match_detections(&kept, gts, 0.5, id)));
            let gt_count = gts.iter().filter(|g| g.category == id).count();
            let ap = if gt_count == 0 {
                None
            } else {
                Some(coco.iter().flatten().sum::<f64>() / COCO_IOU_THRESHOLDS.len() as f64)
            };
            CategoryReport {
                category: name.to_owned(),
                gt_count,
                ap,
                ap50: coco[0],
                ap75: coco[5],
                ap50_voc: voc,
            }
        })
        .collect();

    let mean = |f: fn(&CategoryReport) -> Option<f64>| {
        let vals: Vec<f64> = per_category.iter().filter_map(f).collect();
        if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };

    EvalReport {
        version: REPORT_VERSION,
        score_threshold,
        ap50_voc: mean(|c| c.ap50_voc),
        ap50_coco: mean(|c| c.ap50),
        ap75: mean(|c| c.ap75),
        ap: mean(|c| c.ap),
        per_category,
    }
}

/// Which metric family to print.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportMethod {
    Voc,
    Coco,
    #[default]
    Both,
}

fn fmt_voc(v: f64) -> String {
    format!("{v:.2}")
}

fn fmt_coco(v: f64) -> String {
    format!("{v:.1}")
}

fn fmt_opt(v: Option<f64>, f: fn(f64) -> String) -> String {
    v.map_or_else(|| "-".to_owned(), f)
}

/// Renders the headline table and the per-category table as Markdown.
pub fn render_report(report: &EvalReport, method: ReportMethod) -> String {
    let mut out = String::new();
    let (header, row): (Vec<&str>, Vec<String>) = match method {
        ReportMethod::Voc => (vec!["AP50 (Pascal VOC)"], vec![fmt_voc(report.ap50_voc)]),
        ReportMethod::Coco => (
            vec!["AP50 (COCO)", "AP75", "AP"],
            vec![
                fmt_coco(report.ap50_coco),
                fmt_coco(report.ap75),
                fmt_coco(report.ap),
            ],
        ),
        ReportMethod::Both => (
            vec!["AP50 (Pascal VOC)", "AP50 (COCO)", "AP75", "AP"],
            vec![
                fmt_voc(report.ap50_voc),
                fmt_coco(report.ap50_coco),
                fmt_coco(report.ap75),
                fmt_coco(report.ap),
            ],
        ),
    };
    out.push_str(&markdown(&header, &[row]));
    out.push('\n');

    let metric = match method {
        ReportMethod::Voc => "AP50 (Pascal VOC)",
        _ => "AP",
    };
    let rows: Vec<Vec<String>> = report
        .per_category
        .iter()
        .map(|c| {
            let ap = match method {
                ReportMethod::Voc => fmt_opt(c.ap50_voc, fmt_voc),
                _ => fmt_opt(c.ap, fmt_coco),
            };
            vec![c.category.clone(), c.gt_count.to_string(), ap]
        })
        .collect();
    out.push_str(&markdown(&["Category", "Bounding Boxes", metric], &rows));
    out
}
