//! Command-line front end. One binary, one subcommand per pipeline stage;
//! flags override the optional JSON config file, which overrides built-in
//! defaults. Exit codes: 0 ok, 1 usage, 2 bad input data, 3 internal
//! invariant failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::collapse::{collapse_with, CollapseOptions, CrossingMode};
use crate::dedup::{
    DedupRegistry, WlLabeling, DEFAULT_LAYOUT_CELL, DEFAULT_PHASH_THRESHOLD,
    DEFAULT_WL_ITERATIONS,
};
use crate::detsim::{corrupt_patches, NoiseConfig};
use crate::folds::{make_folds, FoldSplit, DEFAULT_K};
use crate::generate::{generate_corpus, CorpusParams, GenConfig, GenerationReport};
use crate::graphml::{read_graphml, write_graphml};
use crate::manifest;
use crate::metrics::{evaluate_plan, EvalConfig, EvalReport};
use crate::model::{compute_stats, validate, ProcessGraph};
use crate::patcher::{
    crop_image, patch_plan, read_window_index, write_patch_set, Patch, PatchSet, PatchSpec,
};
use crate::stitcher::{stitch, StitchConfig};
use crate::templates::TemplateLibrary;

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "pidforge", version, about = "P&ID graph pipeline toolkit")]
struct Cli {
    /// JSON config file; explicit flags take precedence over it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// cap on worker threads for parallel sections
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// print progress detail to stderr (repeatable)
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Collapse connector chains of a raw annotation into direct edges
    Collapse(CollapseArgs),
    /// Generate a synthetic corpus from seed plans
    Generate(GenerateArgs),
    /// Split a plan annotation (and optionally its image) into windows
    Patch(PatchArgs),
    /// Merge per-patch graphs back into one plan-level graph
    Stitch(StitchArgs),
    /// Score prediction graphs against ground truth
    Eval(EvalArgs),
    /// Corrupt ground-truth patches into synthetic detector output
    Detsim(DetsimArgs),
    /// Per-plan statistics CSV plus corpus summary
    Stats(StatsArgs),
    /// Deterministic cross-validation fold assignments
    Folds(FoldsArgs),
}

#[derive(Args, Debug)]
struct CollapseArgs {
    /// raw-stage GraphML annotation
    input: PathBuf,
    /// collapsed-stage GraphML output
    output: PathBuf,
    /// reconnect the two pipes through each 4-degree crossing instead of
    /// deleting it
    #[arg(long)]
    bridge_crossings: bool,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// collapsed seed plans (GraphML)
    #[arg(long, required = true, num_args = 1.., value_name = "FILE")]
    seeds: Vec<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// accepted plans to produce this run
    #[arg(long)]
    target: usize,
    /// hard cap on generation attempts [default: 200 * target]
    #[arg(long)]
    attempts_cap: Option<u64>,
    /// max node displacement, px
    #[arg(long)]
    delta: Option<f64>,
    /// margin kept around placed symbols, px
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hamming distance below which an image counts as a near-duplicate
    #[arg(long)]
    tau: Option<u32>,
    #[arg(long)]
    wl_iters: Option<u32>,
    #[arg(long, value_enum)]
    labeling: Option<LabelingArg>,
    /// continue into an output directory that already has a manifest
    #[arg(long)]
    resume: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LabelingArg {
    /// node classes only
    Class,
    /// classes plus template ids and quantized positions
    Layout,
}

#[derive(Args, Debug)]
struct PatchArgs {
    /// plan annotation (GraphML, collapsed stage)
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// window side length, px
    #[arg(long)]
    patch: Option<u32>,
    /// window stride, px
    #[arg(long)]
    stride: Option<u32>,
    /// plan image to crop into per-window PNGs
    #[arg(long, value_name = "FILE")]
    image: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StitchArgs {
    /// directory produced by `patch` or `detsim` (windows.json + GraphML)
    #[arg(long, value_name = "DIR")]
    patches: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// boundary attenuation margin, px
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    nms_iou: Option<f64>,
    #[arg(long)]
    wbf_iou: Option<f64>,
    /// border weld tolerance along the boundary, px
    #[arg(long)]
    epsilon: Option<f64>,
    /// minimum confidence kept after stitching
    #[arg(long)]
    floor: Option<f64>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// prediction GraphML file, or directory of them
    #[arg(long, value_name = "PATH")]
    pred: PathBuf,
    /// ground-truth GraphML file, or directory matching --pred by filename
    #[arg(long, value_name = "PATH")]
    gt: PathBuf,
    /// write the full JSON report here
    #[arg(long, value_name = "FILE")]
    report: Option<PathBuf>,
    /// node true-positive IoU threshold
    #[arg(long)]
    node_iou: Option<f64>,
    /// minimum gIoU for a node match to anchor edge endpoints
    #[arg(long)]
    match_giou: Option<f64>,
}

#[derive(Args, Debug)]
struct DetsimArgs {
    /// ground-truth patch directory (windows.json + GraphML)
    #[arg(long, value_name = "DIR")]
    gt_patches: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// named noise level
    #[arg(long, value_enum, conflicts_with = "level")]
    noise_preset: Option<PresetArg>,
    /// numeric noise level in [0,1]
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PresetArg {
    Low,
    Med,
    High,
}

#[derive(Args, Debug)]
struct StatsArgs {
    /// directory of GraphML plans
    corpus: PathBuf,
    /// per-plan CSV output
    #[arg(long, value_name = "FILE")]
    csv: PathBuf,
    /// pooled degree-histogram CSV
    #[arg(long, value_name = "FILE")]
    hist: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FoldsArgs {
    /// directory of GraphML plans to split
    #[arg(long, value_name = "DIR")]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    k: usize,
    /// one split is produced per seed
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    seeds: Vec<u64>,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

/// Optional JSON config file; every field mirrors a flag.
#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct FileConfig {
    generate: GenerateSection,
    patch: PatchSection,
    stitch: StitchSection,
    detsim: DetsimSection,
    eval: EvalSection,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct GenerateSection {
    delta: Option<f64>,
    max_retries: Option<u32>,
    grid_cell: Option<f64>,
    bend_penalty: Option<u64>,
    margin: Option<f64>,
    background: Option<u8>,
    seed: Option<u64>,
    tau: Option<u32>,
    wl_iters: Option<u32>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct PatchSection {
    patch: Option<u32>,
    stride: Option<u32>,
    border_size: Option<f64>,
    margin: Option<f64>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct StitchSection {
    margin: Option<f64>,
    nms_iou: Option<f64>,
    wbf_iou: Option<f64>,
    epsilon: Option<f64>,
    floor: Option<f64>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct DetsimSection {
    level: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize, Default, Debug)]
#[serde(deny_unknown_fields, default)]
struct EvalSection {
    node_iou: Option<f64>,
    match_giou: Option<f64>,
}

enum Failure {
    Data(anyhow::Error),
    Internal(anyhow::Error),
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

type CmdResult = Result<(), Failure>;

/// flag beats config file beats default
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };

    if let Some(jobs) = cli.jobs {
        // ignore the error if a pool was already installed (tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }

    let file_cfg = match &cli.config {
        Some(path) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: reading config {}: {e}", path.display());
                    return EXIT_DATA;
                }
            };
            match serde_json::from_str::<FileConfig>(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: parsing config {}: {e}", path.display());
                    return EXIT_DATA;
                }
            }
        }
        None => FileConfig::default(),
    };

    let verbose = cli.verbose;
    let outcome = match cli.command {
        Command::Collapse(a) => cmd_collapse(a, verbose),
        Command::Generate(a) => cmd_generate(a, &file_cfg.generate, verbose),
        Command::Patch(a) => cmd_patch(a, &file_cfg.patch, verbose),
        Command::Stitch(a) => cmd_stitch(a, &file_cfg.stitch),
        Command::Eval(a) => cmd_eval(a, &file_cfg.eval, verbose),
        Command::Detsim(a) => cmd_detsim(a, &file_cfg.detsim),
        Command::Stats(a) => cmd_stats(a),
        Command::Folds(a) => cmd_folds(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            EXIT_DATA
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            EXIT_INTERNAL
        }
    }
}

fn read_plan(path: &Path) -> Result<ProcessGraph, Failure> {
    read_graphml(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(data)
}

fn write_plan(g: &ProcessGraph, path: &Path) -> CmdResult {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))
                .map_err(data)?;
        }
    }
    write_graphml(g, path)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(data)
}

/// our own output failing validation is a bug, not a data problem
fn check_output(g: &ProcessGraph, what: &str) -> CmdResult {
    let violations = validate(g);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(anyhow!(
            "{what} failed validation: {}",
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )))
    }
}

fn graphml_files(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))
        .map_err(data)?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "graphml"))
        .collect();
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CmdResult {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Internal(anyhow!("serializing report: {e}")))?;
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(data)
}

fn cmd_collapse(a: CollapseArgs, verbose: u8) -> CmdResult {
    let raw = read_plan(&a.input)?;
    let opts = CollapseOptions {
        crossing: if a.bridge_crossings { CrossingMode::Bridge } else { CrossingMode::Delete },
    };
    let outcome = collapse_with(&raw, &opts)
        .with_context(|| format!("collapsing {}", a.input.display()))
        .map_err(data)?;
    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    check_output(&outcome.graph, "collapsed graph")?;
    write_plan(&outcome.graph, &a.output)?;
    if verbose > 0 {
        eprintln!(
            "collapse: {} -> {} nodes, {} edges, {} crossings removed",
            raw.nodes.len(),
            outcome.graph.nodes.len(),
            outcome.graph.edges.len(),
            outcome.crossings_removed
        );
    }
    println!(
        "{} nodes, {} edges, {} warnings",
        outcome.graph.nodes.len(),
        outcome.graph.edges.len(),
        outcome.warnings.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct GenerateDoc {
    schema_version: u32,
    #[serde(flatten)]
    report: GenerationReport,
}

fn cmd_generate(a: GenerateArgs, file: &GenerateSection, verbose: u8) -> CmdResult {
    if a.target == 0 {
        return Err(data(anyhow!("--target must be positive")));
    }
    let cfg = {
        let d = GenConfig::default();
        GenConfig {
            delta: pick(a.delta, file.delta, d.delta),
            max_retries: file.max_retries.unwrap_or(d.max_retries),
            grid_cell: file.grid_cell.unwrap_or(d.grid_cell),
            bend_penalty: file.bend_penalty.unwrap_or(d.bend_penalty),
            margin: pick(a.margin, file.margin, d.margin),
            background: file.background.unwrap_or(d.background),
            seed: pick(a.seed, file.seed, d.seed),
        }
    };
    let labeling = match a.labeling {
        Some(LabelingArg::Class) => WlLabeling::ClassOnly,
        Some(LabelingArg::Layout) | None => WlLabeling::LayoutAware { cell: DEFAULT_LAYOUT_CELL },
    };
    let mut registry = DedupRegistry::new(
        pick(a.tau, file.tau, DEFAULT_PHASH_THRESHOLD),
        pick(a.wl_iters, file.wl_iters, DEFAULT_WL_ITERATIONS),
        labeling,
    );

    let mut seeds = Vec::new();
    for path in &a.seeds {
        seeds.push((stem(path), read_plan(path)?));
    }

    std::fs::create_dir_all(&a.out)
        .with_context(|| format!("creating {}", a.out.display()))
        .map_err(data)?;
    let manifest_path = a.out.join("manifest.jsonl");
    let mut start_attempt = 0;
    if manifest_path.exists() {
        if !a.resume {
            return Err(data(anyhow!(
                "{} already has a manifest; pass --resume to continue",
                a.out.display()
            )));
        }
        let entries = manifest::read_manifest(&manifest_path).map_err(data)?;
        start_attempt = entries.iter().map(|e| e.attempt + 1).max().unwrap_or(0);
        manifest::seed_registry(&entries, &mut registry).map_err(data)?;
        if verbose > 0 {
            eprintln!("resuming after {} accepted plans", entries.len());
        }
    }

    let params = CorpusParams {
        target: a.target,
        attempts_cap: a.attempts_cap.unwrap_or(200 * a.target as u64),
        start_attempt,
    };
    let report = generate_corpus(
        &seeds,
        &params,
        &cfg,
        TemplateLibrary::builtin(),
        &mut registry,
        &a.out,
    )
    .map_err(data)?;

    write_json(&GenerateDoc { schema_version: SCHEMA_VERSION, report: report.clone() },
        &a.out.join("report.json"))?;
    println!(
        "accepted {} plans in {} attempts ({} structural, {} visual rejects)",
        report.accepted, report.attempts, report.rejected_structural, report.rejected_visual
    );
    Ok(())
}

fn cmd_patch(a: PatchArgs, file: &PatchSection, verbose: u8) -> CmdResult {
    let d = PatchSpec::default();
    let spec = PatchSpec {
        patch: pick(a.patch, file.patch, d.patch),
        stride: pick(a.stride, file.stride, d.stride),
        border_size: file.border_size.unwrap_or(d.border_size),
        margin: file.margin.unwrap_or(d.margin),
    };
    let plan = read_plan(&a.plan)?;
    let set = patch_plan(&plan, None, &spec).map_err(data)?;
    write_patch_set(&set, &a.out).map_err(data)?;

    if let Some(image_path) = &a.image {
        let img = image::open(image_path)
            .with_context(|| format!("reading {}", image_path.display()))
            .map_err(data)?
            .to_luma8();
        if (img.width(), img.height()) != plan.canvas {
            return Err(data(anyhow!(
                "image is {}x{} but the annotation canvas is {}x{}",
                img.width(),
                img.height(),
                plan.canvas.0,
                plan.canvas.1
            )));
        }
        for p in &set.patches {
            let crop = crop_image(&img, p.origin, &spec, 230);
            let out = a.out.join(format!("{}_{}.png", p.origin.0, p.origin.1));
            crop.save(&out)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(data)?;
        }
    }
    if verbose > 0 {
        for p in &set.patches {
            eprintln!(
                "window ({}, {}): {} nodes, {} borders",
                p.origin.0,
                p.origin.1,
                p.graph.nodes.len(),
                p.borders.len()
            );
        }
    }
    println!("{} windows -> {}", set.patches.len(), a.out.display());
    Ok(())
}

fn read_patch_dir(dir: &Path) -> Result<(crate::patcher::WindowIndex, Vec<((u32, u32), ProcessGraph)>), Failure> {
    let idx = read_window_index(&dir.join("windows.json")).map_err(data)?;
    let mut patches = Vec::with_capacity(idx.windows.len());
    for &(x, y) in &idx.windows {
        let path = dir.join(format!("{x}_{y}.graphml"));
        patches.push(((x, y), read_plan(&path)?));
    }
    Ok((idx, patches))
}

fn cmd_stitch(a: StitchArgs, file: &StitchSection) -> CmdResult {
    let d = StitchConfig::default();
    let cfg = StitchConfig {
        margin: pick(a.margin, file.margin, d.margin),
        nms_iou: pick(a.nms_iou, file.nms_iou, d.nms_iou),
        wbf_iou: pick(a.wbf_iou, file.wbf_iou, d.wbf_iou),
        epsilon: pick(a.epsilon, file.epsilon, d.epsilon),
        floor: pick(a.floor, file.floor, d.floor),
    };
    let (idx, patches) = read_patch_dir(&a.patches)?;
    let stitched = stitch(&patches, idx.patch, idx.canvas, &cfg);
    check_output(&stitched, "stitched graph")?;
    write_plan(&stitched, &a.out)?;
    println!(
        "{} nodes, {} edges from {} windows",
        stitched.nodes.len(),
        stitched.edges.len(),
        patches.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalDoc {
    schema_version: u32,
    node_iou: f64,
    match_giou: f64,
    mean_node_map: f64,
    mean_edge_map: f64,
    plans: BTreeMap<String, EvalReport>,
}

fn cmd_eval(a: EvalArgs, file: &EvalSection, verbose: u8) -> CmdResult {
    let d = EvalConfig::default();
    let cfg = EvalConfig {
        node_iou: pick(a.node_iou, file.node_iou, d.node_iou),
        match_giou: pick(a.match_giou, file.match_giou, d.match_giou),
    };

    let pairs: Vec<(String, PathBuf, PathBuf)> = if a.pred.is_dir() && a.gt.is_dir() {
        let gt_files = graphml_files(&a.gt)?;
        if gt_files.is_empty() {
            return Err(data(anyhow!("no .graphml files in {}", a.gt.display())));
        }
        let mut pairs = Vec::new();
        for gt_path in gt_files {
            let name = gt_path.file_name().unwrap();
            let pred_path = a.pred.join(name);
            if !pred_path.exists() {
                return Err(data(anyhow!("missing prediction {}", pred_path.display())));
            }
            pairs.push((stem(&gt_path), pred_path, gt_path));
        }
        pairs
    } else if a.pred.is_file() && a.gt.is_file() {
        vec![(stem(&a.gt), a.pred.clone(), a.gt.clone())]
    } else {
        return Err(data(anyhow!("--pred and --gt must both be files or both directories")));
    };

    let reports: Vec<(String, EvalReport)> = pairs
        .par_iter()
        .map(|(id, pred_path, gt_path)| -> Result<(String, EvalReport), Failure> {
            let pred = read_plan(pred_path)?;
            let gt = read_plan(gt_path)?;
            Ok((id.clone(), evaluate_plan(&pred, &gt, &cfg)))
        })
        .collect::<Result<_, _>>()?;

    let n = reports.len() as f64;
    let mean_node = reports.iter().map(|(_, r)| r.node_map).sum::<f64>() / n;
    let mean_edge = reports.iter().map(|(_, r)| r.edge_map).sum::<f64>() / n;
    if verbose > 0 {
        for (id, r) in &reports {
            eprintln!("{id}: node mAP {:.4}, edge mAP {:.4}", r.node_map, r.edge_map);
            for w in &r.warnings {
                eprintln!("warning: {id}: {w}");
            }
        }
    }
    if let Some(path) = &a.report {
        let doc = EvalDoc {
            schema_version: SCHEMA_VERSION,
            node_iou: cfg.node_iou,
            match_giou: cfg.match_giou,
            mean_node_map: mean_node,
            mean_edge_map: mean_edge,
            plans: reports.into_iter().collect(),
        };
        write_json(&doc, path)?;
    }
    println!("node mAP {mean_node:.4}, edge mAP {mean_edge:.4} over {} plans", pairs.len());
    Ok(())
}

fn cmd_detsim(a: DetsimArgs, file: &DetsimSection) -> CmdResult {
    let seed = pick(a.seed, file.seed, 0);
    let cfg = match (a.noise_preset, a.level.or(file.level)) {
        (Some(p), None) => {
            let name = match p {
                PresetArg::Low => "low",
                PresetArg::Med => "med",
                PresetArg::High => "high",
            };
            NoiseConfig::preset(name, seed).unwrap()
        }
        (None, Some(level)) => {
            if !(0.0..=1.0).contains(&level) {
                return Err(data(anyhow!("--level must be in [0, 1], got {level}")));
            }
            NoiseConfig::from_level(level, seed)
        }
        (None, None) => NoiseConfig::from_level(0.2, seed),
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let (idx, patches) = read_patch_dir(&a.gt_patches)?;
    let corrupted = corrupt_patches(&patches, &cfg);
    let set = PatchSet {
        spec: idx.spec(),
        canvas: idx.canvas,
        patches: corrupted
            .into_iter()
            .map(|(origin, graph)| Patch {
                origin,
                graph,
                borders: Vec::new(),
                partial_ids: Vec::new(),
            })
            .collect(),
    };
    write_patch_set(&set, &a.out).map_err(data)?;
    println!("corrupted {} windows -> {}", set.patches.len(), a.out.display());
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct PlanStats {
    pub plan: String,
    pub nodes: usize,
    pub edges: usize,
    pub density: f64,
    /// "degree:count" pairs joined with ';'
    pub degree_histogram: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub plans: usize,
    pub node_mean: f64,
    pub node_std: f64,
    pub edge_mean: f64,
    pub edge_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Per-plan stats plus a corpus summary and pooled degree histogram.
/// Unreadable plans are skipped; their paths come back as warnings.
pub fn stats_report(
    dir: &Path,
) -> std::io::Result<(Vec<PlanStats>, StatsSummary, BTreeMap<usize, usize>, Vec<String>)> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "graphml"))
        .collect();
    files.sort();

    let mut rows = Vec::new();
    let mut pooled: BTreeMap<usize, usize> = BTreeMap::new();
    let mut warnings = Vec::new();
    for path in files {
        let g = match read_graphml(&path) {
            Ok(g) => g,
            Err(e) => {
                warnings.push(format!("{}: {e}", path.display()));
                continue;
            }
        };
        let s = compute_stats(&g);
        for (deg, count) in &s.degree_histogram {
            *pooled.entry(*deg).or_insert(0) += count;
        }
        let hist = s
            .degree_histogram
            .iter()
            .map(|(d, c)| format!("{d}:{c}"))
            .collect::<Vec<_>>()
            .join(";");
        rows.push(PlanStats {
            plan: stem(&path),
            nodes: s.node_count,
            edges: s.edge_count,
            density: s.edge_density,
            degree_histogram: hist,
        });
    }
    let (node_mean, node_std) = mean_std(&rows.iter().map(|r| r.nodes as f64).collect::<Vec<_>>());
    let (edge_mean, edge_std) = mean_std(&rows.iter().map(|r| r.edges as f64).collect::<Vec<_>>());
    let summary =
        StatsSummary { plans: rows.len(), node_mean, node_std, edge_mean, edge_std };
    Ok((rows, summary, pooled, warnings))
}

fn cmd_stats(a: StatsArgs) -> CmdResult {
    let (rows, summary, pooled, warnings) = stats_report(&a.corpus)
        .with_context(|| format!("reading {}", a.corpus.display()))
        .map_err(data)?;
    for w in warnings {
        eprintln!("warning: skipped {w}");
    }

    let mut wtr = csv::Writer::from_path(&a.csv)
        .with_context(|| format!("writing {}", a.csv.display()))
        .map_err(data)?;
    wtr.write_record(["schema_version", "plan", "nodes", "edges", "density", "degree_histogram"])
        .map_err(|e| data(anyhow!("csv: {e}")))?;
    for r in &rows {
        wtr.write_record([
            SCHEMA_VERSION.to_string(),
            r.plan.clone(),
            r.nodes.to_string(),
            r.edges.to_string(),
            format!("{:.4}", r.density),
            r.degree_histogram.clone(),
        ])
        .map_err(|e| data(anyhow!("csv: {e}")))?;
    }
    wtr.flush().map_err(|e| data(anyhow!("csv: {e}")))?;

    if let Some(hist_path) = &a.hist {
        let mut wtr = csv::Writer::from_path(hist_path)
            .with_context(|| format!("writing {}", hist_path.display()))
            .map_err(data)?;
        wtr.write_record(["schema_version", "degree", "count"])
            .map_err(|e| data(anyhow!("csv: {e}")))?;
        for (deg, count) in &pooled {
            wtr.write_record([SCHEMA_VERSION.to_string(), deg.to_string(), count.to_string()])
                .map_err(|e| data(anyhow!("csv: {e}")))?;
        }
        wtr.flush().map_err(|e| data(anyhow!("csv: {e}")))?;
    }

    if summary.plans == 0 {
        println!("plans=0 nodes=- edges=-");
    } else {
        println!(
            "plans={} nodes={:.1}±{:.1} edges={:.1}±{:.1}",
            summary.plans, summary.node_mean, summary.node_std, summary.edge_mean,
            summary.edge_std
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct FoldsDoc {
    schema_version: u32,
    k: usize,
    runs: usize,
    splits: Vec<FoldSplit>,
}

fn cmd_folds(a: FoldsArgs) -> CmdResult {
    let ids: Vec<String> = graphml_files(&a.corpus)?.iter().map(|p| stem(p)).collect();
    if ids.is_empty() {
        return Err(data(anyhow!("no .graphml files in {}", a.corpus.display())));
    }
    let mut splits = Vec::new();
    for &seed in &a.seeds {
        splits.push(make_folds(&ids, a.k, seed).map_err(data)?);
    }
    let runs = a.k * splits.len();
    write_json(&FoldsDoc { schema_version: SCHEMA_VERSION, k: a.k, runs, splits }, &a.out)?;
    println!("{} folds x {} seeds = {} runs -> {}", a.k, a.seeds.len(), runs, a.out.display());
    Ok(())
}
