use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use organdet::dataset::{
    compute_stats, read_coco_json, read_voc_dataset, render_stats, rescale_manifest,
    write_coco_json, write_voc_dataset, CocoDocument, DatasetManifest, VocOptions,
};
use organdet::eval::{evaluate, render_report, ReportMethod, DEFAULT_SCORE_THRESHOLD};
use organdet::review::ReviewStore;
use organdet::rpn::{anchor_shape, generate_anchors, nms, AnchorConfig, TEST_NMS_THRESHOLD};
use organdet::CategoryVocabulary;
use organdet_review::{router, serve, shutdown_signal, ServiceConfig};

#[derive(Parser)]
#[command(name = "organdet", version, about = "Plant-organ detection dataset and evaluation tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert annotations between LabelImg XML, COCO JSON and the manifest.
    Convert(ConvertArgs),
    /// Print per-category, per-split box counts.
    Stats(StatsArgs),
    /// Resize every image to fit within a target size, carrying boxes along.
    Rescale(RescaleArgs),
    /// Apply non-maximum suppression to predicted boxes, per image.
    Nms(NmsArgs),
    /// Drop predicted boxes scoring below a threshold.
    Filter(FilterArgs),
    /// List the anchors tiled over feature grids.
    Anchors(AnchorsArgs),
    /// Score predictions against ground truth with VOC and COCO AP.
    Evaluate(EvaluateArgs),
    /// Run the HTTP review service.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    VocXml,
    Coco,
    Manifest,
}

#[derive(Args)]
struct ConvertArgs {
    /// Annotation file, directory of XML files, or VOC root.
    input: PathBuf,
    /// Input format; guessed from the input when omitted.
    #[arg(long)]
    from: Option<Format>,
    #[arg(long, default_value = "manifest")]
    to: Format,
    /// Output file (a directory for voc-xml); stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Accept labels outside the six organ categories.
    #[arg(long)]
    allow_new_categories: bool,
    /// Directory with train.txt / test.txt split lists.
    #[arg(long)]
    image_sets: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    /// Manifest, COCO document or XML annotations.
    input: PathBuf,
    /// Also write the statistics as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RescaleArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1200, value_parser = clap::value_parser!(u32).range(1..))]
    width: u32,
    #[arg(long, default_value_t = 800, value_parser = clap::value_parser!(u32).range(1..))]
    height: u32,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NmsArgs {
    /// Predictions as a manifest or COCO document with scores.
    input: PathBuf,
    #[arg(long, default_value_t = TEST_NMS_THRESHOLD, value_parser = unit_interval)]
    threshold: f64,
    /// Only let boxes of the same category suppress each other.
    #[arg(long)]
    per_category: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD, value_parser = unit_interval)]
    score_threshold: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct AnchorsArgs {
    /// Comma-separated anchor scales, one per level.
    #[arg(long, value_delimiter = ',', default_values_t = AnchorConfig::default().scales)]
    scales: Vec<f64>,
    /// Comma-separated width/height ratios.
    #[arg(long, value_delimiter = ',', default_values_t = AnchorConfig::default().ratios)]
    ratios: Vec<f64>,
    /// Comma-separated strides, one per level.
    #[arg(long, value_delimiter = ',', default_values_t = AnchorConfig::default().strides)]
    strides: Vec<u32>,
    /// Grid size `ROWSxCOLS` used at every level.
    #[arg(long, default_value = "1x1", conflicts_with = "image")]
    grid: String,
    /// Image size `WIDTHxHEIGHT`; grids are derived from the strides.
    #[arg(long)]
    image: Option<String>,
    /// Print only the count summary.
    #[arg(long)]
    summary: bool,
    /// Also write the anchors as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Voc,
    Coco,
    Both,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth manifest, COCO document or XML annotations.
    #[arg(long)]
    gt: PathBuf,
    /// Scored predictions as a manifest or COCO document.
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SCORE_THRESHOLD, value_parser = unit_interval)]
    score_threshold: f64,
    #[arg(long, value_enum, default_value = "both")]
    method: Method,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Directory holding the image files named in the manifest.
    #[arg(long, env = "ORGANDET_IMAGES_ROOT")]
    images_root: Option<PathBuf>,
    /// Append-only correction log; defaults to `<manifest>.events.jsonl`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Static assets of the review workbench.
    #[arg(long)]
    ui_dir: Option<PathBuf>,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(u32, u32)> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .with_context(|| format!("{what} must look like 12x34, got {s:?}"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

fn guess_format(path: &Path) -> Result<Format> {
    if path.is_dir() {
        return Ok(Format::VocXml);
    }
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("xml"))
    {
        return Ok(Format::VocXml);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: not JSON or XML", path.display()))?;
    if value.get("version").is_some() {
        Ok(Format::Manifest)
    } else if value.get("annotations").is_some() {
        Ok(Format::Coco)
    } else {
        bail!("{}: unrecognized annotation document", path.display())
    }
}

fn load(path: &Path, format: Option<Format>, voc: VocOptions, image_sets: Option<&Path>) -> Result<DatasetManifest> {
    let format = match format {
        Some(f) => f,
        None => guess_format(path)?,
    };
    let ctx = || format!("reading {}", path.display());
    Ok(match format {
        Format::VocXml => read_voc_dataset(path, image_sets, CategoryVocabulary::default(), voc).with_context(ctx)?,
        Format::Manifest => DatasetManifest::load(path).with_context(ctx)?,
        Format::Coco => {
            let text = std::fs::read_to_string(path).with_context(ctx)?;
            read_coco_json(&CocoDocument::from_json(&text).with_context(ctx)?).with_context(ctx)?
        }
    })
}

fn load_auto(path: &Path) -> Result<DatasetManifest> {
    load(path, None, VocOptions::default(), None)
}

/// Writes text to `path` atomically, or to stdout.
fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)
                .with_context(|| format!("writing {}", path.display()))?;
            tmp.write_all(text.as_bytes())?;
            tmp.persist(path)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Writes `m` in the format it was read from.
fn emit_like(input: &Path, output: Option<&Path>, m: &DatasetManifest) -> Result<()> {
    match guess_format(input)? {
        Format::Coco => emit(output, &write_coco_json(m).to_json()),
        _ => emit(output, &m.to_json()),
    }
}

fn cmd_convert(a: ConvertArgs) -> Result<()> {
    let opts = VocOptions {
        allow_new_categories: a.allow_new_categories,
    };
    let m = load(&a.input, a.from, opts, a.image_sets.as_deref())?;
    match a.to {
        Format::Manifest => emit(a.output.as_deref(), &m.to_json())?,
        Format::Coco => emit(a.output.as_deref(), &write_coco_json(&m).to_json())?,
        Format::VocXml => {
            let dir = a.output.context("--to voc-xml needs an output directory (-o)")?;
            write_voc_dataset(&m, &dir)?;
        }
    }
    eprintln!(
        "converted {} images, {} boxes, {} categories",
        m.images.len(),
        m.box_count(),
        m.vocabulary.len()
    );
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let stats = compute_stats(&load_auto(&a.input)?);
    print!("{}", render_stats(&stats));
    if let Some(path) = a.json {
        emit(Some(&path), &serde_json::to_string_pretty(&stats)?)?;
    }
    Ok(())
}

fn cmd_rescale(a: RescaleArgs) -> Result<()> {
    let m = load_auto(&a.input)?;
    let out = rescale_manifest(&m, a.width, a.height);
    out.validate()?;
    emit_like(&a.input, a.output.as_deref(), &out)?;
    eprintln!("rescaled {} images to fit {}x{}", out.images.len(), a.width, a.height);
    Ok(())
}

fn cmd_nms(a: NmsArgs) -> Result<()> {
    let mut m = load_auto(&a.input)?;
    let (mut kept_total, mut suppressed) = (0, 0);
    for img in &mut m.images {
        let boxes: Vec<_> = img.boxes.iter().map(|b| b.bbox).collect();
        let scores = img
            .boxes
            .iter()
            .enumerate()
            .map(|(i, b)| {
                b.score
                    .with_context(|| format!("box {i} of image {} has no score", img.image_id))
            })
            .collect::<Result<Vec<f64>>>()?;
        let cats: Vec<&str> = img.boxes.iter().map(|b| b.category.as_str()).collect();
        let mut keep = nms(&boxes, &scores, a.threshold, a.per_category.then_some(&cats[..]))?;
        keep.sort_unstable();
        suppressed += img.boxes.len() - keep.len();
        kept_total += keep.len();
        let old = std::mem::take(&mut img.boxes);
        img.boxes = keep.into_iter().map(|i| old[i].clone()).collect();
    }
    emit_like(&a.input, a.output.as_deref(), &m)?;
    eprintln!("kept {kept_total} boxes, suppressed {suppressed}");
    Ok(())
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let mut m = load_auto(&a.input)?;
    let before = m.box_count();
    for img in &mut m.images {
        img.boxes.retain(|b| b.score.is_some_and(|s| s >= a.score_threshold));
    }
    emit_like(&a.input, a.output.as_deref(), &m)?;
    eprintln!("kept {} of {before} boxes", m.box_count());
    Ok(())
}

fn cmd_anchors(a: AnchorsArgs) -> Result<()> {
    let cfg = AnchorConfig {
        scales: a.scales,
        ratios: a.ratios,
        strides: a.strides,
        ..AnchorConfig::default()
    };
    cfg.validate()?;
    let grids = match &a.image {
        Some(s) => {
            let (w, h) = parse_pair(s, "--image")?;
            cfg.grid_sizes_for_image(w, h)
        }
        None => {
            let (rows, cols) = parse_pair(&a.grid, "--grid")?;
            vec![(rows as usize, cols as usize); cfg.levels()]
        }
    };
    let anchors = generate_anchors(&cfg, &grids)?;
    if !a.summary {
        let mut out = std::io::stdout().lock();
        writeln!(out, "level\tscale\tratio\tcx\tcy\twidth\theight")?;
        for (k, anchor) in anchors.iter().enumerate() {
            let (cx, cy) = anchor.bbox.center();
            let scale = cfg.scales[anchor.level];
            let ratio = cfg.ratios[k % cfg.ratios.len()];
            let (w, h) = anchor_shape(scale, ratio);
            writeln!(out, "{}\t{scale}\t{ratio}\t{cx:.3}\t{cy:.3}\t{w:.3}\t{h:.3}", anchor.level)?;
        }
    }
    let per_level: Vec<String> = grids
        .iter()
        .map(|(r, c)| (r * c * cfg.ratios.len()).to_string())
        .collect();
    println!("{} anchors ({} per level)", anchors.len(), per_level.join(" + "));
    if let Some(path) = a.json {
        emit(Some(&path), &serde_json::to_string_pretty(&anchors)?)?;
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs) -> Result<()> {
    let gt = load_auto(&a.gt)?;
    let pred = load_auto(&a.predictions)?;
    let dets = pred
        .detections(&gt.vocabulary)
        .context("predictions do not match the ground-truth vocabulary")?;
    let report = evaluate(&dets, &gt.ground_truth()?, &gt.vocabulary, a.score_threshold);
    let method = match a.method {
        Method::Voc => ReportMethod::Voc,
        Method::Coco => ReportMethod::Coco,
        Method::Both => ReportMethod::Both,
    };
    print!("{}", render_report(&report, method));
    if let Some(path) = a.json {
        emit(Some(&path), &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn default_log_path(manifest: &Path) -> PathBuf {
    let mut name = manifest.as_os_str().to_owned();
    name.push(".events.jsonl");
    PathBuf::from(name)
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&a.manifest)
        .with_context(|| format!("loading manifest {}", a.manifest.display()))?;
    let log = a.log.unwrap_or_else(|| default_log_path(&a.manifest));
    let store = ReviewStore::open(manifest, &log)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(a.host, a.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        let app = router(
            store,
            ServiceConfig {
                images_root: a.images_root,
                ui_dir: a.ui_dir,
            },
        );
        eprintln!("review service listening on http://{}", listener.local_addr()?);
        serve(listener, app, shutdown_signal()).await?;
        eprintln!("review service stopped");
        Ok(())
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert(a) => cmd_convert(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Rescale(a) => cmd_rescale(a),
        Command::Nms(a) => cmd_nms(a),
        Command::Filter(a) => cmd_filter(a),
        Command::Anchors(a) => cmd_anchors(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
