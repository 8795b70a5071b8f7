//! Synthetic plan generation: jitter the layout of a seed plan, swap node
//! symbols for random template variants, re-route and rasterize, then keep
//! the sample only if the duplicate filter accepts it.
//!
//! Each attempt draws from its own RNG stream (master seed + attempt index),
//! so attempt N produces the same plan whether or not earlier attempts were
//! accepted — that is what makes interrupted runs resumable.

use std::path::Path;

use chrono::{SecondsFormat, Utc};
use image::GrayImage;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dedup::{DedupRegistry, RejectReason};
use crate::graphml;
use crate::manifest::{self, ManifestEntry};
use crate::model::{BBox, NodeClass, ProcessGraph, Stage};
use crate::render::{render, RenderConfig};
use crate::route::{route_edges, RouteConfig, RoutedEdge};
use crate::templates::TemplateLibrary;

#[derive(Debug, Clone)]
pub struct GenConfig {
    /// node jitter amplitude in px (uniform square)
    pub delta: f64,
    /// placement re-samples before giving up on a node
    pub max_retries: u32,
    /// routing grid pitch in px
    pub grid_cell: f64,
    /// routing bend cost in cell steps
    pub bend_penalty: u64,
    /// clear canvas margin in px
    pub margin: f64,
    /// paper gray level
    pub background: u8,
    /// master seed; attempt i uses stream i of this seed
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            delta: 60.0,
            max_retries: 25,
            grid_cell: 10.0,
            bend_penalty: 2,
            margin: 100.0,
            background: 230,
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("generation needs a collapsed plan, got stage {0}")]
    WrongStage(Stage),
    #[error("no symbol templates for class {0}")]
    NoTemplates(NodeClass),
    #[error(transparent)]
    Graphml(#[from] graphml::GraphmlError),
    #[error("write {path}: {message}")]
    Write { path: String, message: String },
    #[error(
        "no plan accepted in {attempts} attempts \
         ({structural} structural rejects, {visual} visual rejects)"
    )]
    NoAcceptances { attempts: u64, structural: u64, visual: u64 },
}

/// Jitter every node box by an offset drawn uniformly from
/// [-delta, delta]^2. A draw is rejected and re-sampled when the moved box
/// would leave the canvas margin or overlap another box at its current
/// position; after `max_retries` rejections the node keeps its original
/// placement. Returns the moved graph and the number of such fallbacks.
pub fn perturb_layout(
    g: &ProcessGraph,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> (ProcessGraph, u32) {
    let (w, h) = (g.canvas.0 as f64, g.canvas.1 as f64);
    let mut out = g.clone();
    let mut fallbacks = 0u32;

    let fits = |b: &BBox, margin: f64| {
        b.x1 >= margin && b.y1 >= margin && b.x2 <= w - margin && b.y2 <= h - margin
    };

    for i in 0..out.nodes.len() {
        let original = out.nodes[i].bbox;
        // honor the configured margin only when the seed placement does;
        // otherwise fall back to plain canvas containment
        let margin = if fits(&original, cfg.margin) { cfg.margin } else { 0.0 };
        let mut placed = false;
        for _ in 0..=cfg.max_retries {
            let dx = rng.random_range(-cfg.delta..=cfg.delta);
            let dy = rng.random_range(-cfg.delta..=cfg.delta);
            let cand = original.translated(dx, dy);
            if !fits(&cand, margin) {
                continue;
            }
            let overlaps = out
                .nodes
                .iter()
                .enumerate()
                .any(|(j, n)| j != i && boxes_overlap(&cand, &n.bbox));
            if overlaps {
                continue;
            }
            out.nodes[i].bbox = cand;
            placed = true;
            break;
        }
        if !placed {
            fallbacks += 1; // keep the original placement
        }
    }
    (out, fallbacks)
}

fn boxes_overlap(a: &BBox, b: &BBox) -> bool {
    a.x1 < b.x2 && b.x1 < a.x2 && a.y1 < b.y2 && b.y1 < a.y2
}

/// Pick a random template variant per node and resize its box to the
/// template's nominal size about the box center (shifted inward if the
/// resize would cross the canvas edge).
pub fn substitute_symbols(
    g: &ProcessGraph,
    lib: &TemplateLibrary,
    rng: &mut ChaCha8Rng,
) -> Result<ProcessGraph, GenerateError> {
    let (w, h) = (g.canvas.0 as f64, g.canvas.1 as f64);
    let mut out = g.clone();
    for n in &mut out.nodes {
        let templates = lib.for_class(n.cls);
        if templates.is_empty() {
            return Err(GenerateError::NoTemplates(n.cls));
        }
        let t = &templates[rng.random_range(0..templates.len())];
        let (cx, cy) = n.bbox.center();
        let (tw, th) = t.size;
        let mut b = BBox::new(cx - tw / 2.0, cy - th / 2.0, cx + tw / 2.0, cy + th / 2.0);
        if b.x1 < 0.0 {
            b = b.translated(-b.x1, 0.0);
        }
        if b.y1 < 0.0 {
            b = b.translated(0.0, -b.y1);
        }
        if b.x2 > w {
            b = b.translated(w - b.x2, 0.0);
        }
        if b.y2 > h {
            b = b.translated(0.0, h - b.y2);
        }
        n.bbox = b;
        n.template = Some(t.id.to_string());
    }
    Ok(out)
}

#[derive(Debug)]
pub struct GeneratedPlan {
    pub graph: ProcessGraph,
    pub routes: Vec<RoutedEdge>,
    pub image: GrayImage,
    pub placement_fallbacks: u32,
    pub route_fallbacks: u32,
}

/// One full attempt: perturb, substitute, route, rasterize.
pub fn generate_plan(
    seed_plan: &ProcessGraph,
    cfg: &GenConfig,
    lib: &TemplateLibrary,
    rng: &mut ChaCha8Rng,
) -> Result<GeneratedPlan, GenerateError> {
    if seed_plan.stage != Stage::Collapsed {
        return Err(GenerateError::WrongStage(seed_plan.stage));
    }
    let (moved, placement_fallbacks) = perturb_layout(seed_plan, cfg, rng);
    let graph = substitute_symbols(&moved, lib, rng)?;
    let routes = route_edges(
        &graph,
        &RouteConfig { cell: cfg.grid_cell, bend_penalty: cfg.bend_penalty },
    );
    let route_fallbacks = routes.iter().filter(|r| r.fallback).count() as u32;
    let image = render(&graph, &routes, lib, &RenderConfig { background: cfg.background });
    Ok(GeneratedPlan { graph, routes, image, placement_fallbacks, route_fallbacks })
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct GenerationReport {
    pub accepted: usize,
    pub attempts: u64,
    pub rejected_structural: u64,
    pub rejected_visual: u64,
    pub placement_fallbacks: u64,
    pub route_fallbacks: u64,
}

#[derive(Debug, Clone)]
pub struct CorpusParams {
    /// accepted plans to produce
    pub target: usize,
    /// hard cap on attempts (counted from `start_attempt`)
    pub attempts_cap: u64,
    /// first attempt index; nonzero when resuming an earlier run
    pub start_attempt: u64,
}

/// Generate plans round-robin over the seed plans until `target` acceptances
/// or the attempt cap. Writes `<plan_id>.png`, `<plan_id>.graphml` and a
/// manifest line per acceptance into `out_dir`.
pub fn generate_corpus(
    seeds: &[(String, ProcessGraph)],
    params: &CorpusParams,
    cfg: &GenConfig,
    lib: &TemplateLibrary,
    registry: &mut DedupRegistry,
    out_dir: &Path,
) -> Result<GenerationReport, GenerateError> {
    assert!(!seeds.is_empty(), "at least one seed plan required");
    let manifest_path = out_dir.join("manifest.jsonl");
    let mut report = GenerationReport::default();

    for step in 0..params.attempts_cap {
        if report.accepted >= params.target {
            break;
        }
        let attempt = params.start_attempt + step;
        report.attempts += 1;
        let (seed_id, seed_plan) = &seeds[(attempt % seeds.len() as u64) as usize];

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(attempt);
        let plan = generate_plan(seed_plan, cfg, lib, &mut rng)?;
        report.placement_fallbacks += plan.placement_fallbacks as u64;
        report.route_fallbacks += plan.route_fallbacks as u64;

        let (wl, ph) = match registry.try_accept(&plan.graph, &plan.image) {
            Ok(pair) => pair,
            Err(RejectReason::Structural) => {
                report.rejected_structural += 1;
                continue;
            }
            Err(RejectReason::Visual { .. }) => {
                report.rejected_visual += 1;
                continue;
            }
        };

        let plan_id = format!("{seed_id}_{attempt:05}");
        let image_name = format!("{plan_id}.png");
        let annot_name = format!("{plan_id}.graphml");
        let image_path = out_dir.join(&image_name);
        plan.image.save(&image_path).map_err(|e| GenerateError::Write {
            path: image_path.display().to_string(),
            message: e.to_string(),
        })?;
        graphml::write_graphml(&plan.graph, &out_dir.join(&annot_name))?;

        let entry = ManifestEntry {
            schema_version: manifest::SCHEMA_VERSION,
            plan_id,
            image_path: image_name,
            annotation_path: annot_name,
            seed_id: seed_id.clone(),
            wl_hash: wl.to_hex(),
            phash: ph.to_hex(),
            attempt,
            accepted_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        };
        manifest::append_entry(&manifest_path, &entry).map_err(|e| GenerateError::Write {
            path: manifest_path.display().to_string(),
            message: e.to_string(),
        })?;
        report.accepted += 1;
    }

    if report.accepted == 0 {
        return Err(GenerateError::NoAcceptances {
            attempts: report.attempts,
            structural: report.rejected_structural,
            visual: report.rejected_visual,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::toy_seed;
    use crate::manifest::read_manifest;

    fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        rng
    }

    #[test]
    fn zero_delta_is_identity() {
        let (_, seed_plan) = toy_seed(0);
        let cfg = GenConfig { delta: 0.0, ..GenConfig::default() };
        let (moved, fallbacks) = perturb_layout(&seed_plan, &cfg, &mut rng_for(1, 0));
        assert_eq!(fallbacks, 0);
        for (a, b) in seed_plan.nodes.iter().zip(&moved.nodes) {
            assert_eq!(a.bbox, b.bbox);
        }
    }

    #[test]
    fn perturbed_layout_respects_margin_and_overlap() {
        let (_, seed_plan) = toy_seed(1);
        let cfg = GenConfig::default();
        let (moved, fallbacks) = perturb_layout(&seed_plan, &cfg, &mut rng_for(7, 3));
        assert_eq!(fallbacks, 0, "spacious toy layout should never fall back");
        let (w, h) = (moved.canvas.0 as f64, moved.canvas.1 as f64);
        let mut shifted = 0;
        for n in &moved.nodes {
            assert!(n.bbox.x1 >= cfg.margin && n.bbox.y1 >= cfg.margin);
            assert!(n.bbox.x2 <= w - cfg.margin && n.bbox.y2 <= h - cfg.margin);
        }
        for i in 0..moved.nodes.len() {
            if moved.nodes[i].bbox != seed_plan.nodes[i].bbox {
                shifted += 1;
            }
            for j in 0..i {
                assert!(
                    !boxes_overlap(&moved.nodes[i].bbox, &moved.nodes[j].bbox),
                    "{} overlaps {}",
                    moved.nodes[i].id,
                    moved.nodes[j].id
                );
            }
        }
        assert!(shifted > 0, "delta=60 should move at least one node");
    }

    #[test]
    fn substitution_assigns_templates_and_nominal_sizes() {
        let (_, seed_plan) = toy_seed(2);
        let lib = TemplateLibrary::builtin();
        let out = substitute_symbols(&seed_plan, lib, &mut rng_for(5, 0)).unwrap();
        for n in &out.nodes {
            let tid = n.template.as_deref().expect("template assigned");
            let t = lib.get(tid).expect("known template");
            assert_eq!(t.cls, n.cls);
            assert!((n.bbox.width() - t.size.0).abs() < 1e-9);
            assert!((n.bbox.height() - t.size.1).abs() < 1e-9);
        }
    }

    #[test]
    fn substitution_fails_without_templates() {
        use crate::model::{Edge, EdgeClass, Node};
        let mut g = ProcessGraph::new((400, 400), Stage::Raw);
        g.nodes.push(Node::new("v", NodeClass::Valve, BBox::centered(100.0, 100.0, 30.0)));
        g.nodes.push(Node::new("c", NodeClass::Connector, BBox::centered(200.0, 100.0, 8.0)));
        g.edges.push(Edge::new("v", "c", EdgeClass::Solid));
        match substitute_symbols(&g, TemplateLibrary::builtin(), &mut rng_for(0, 0)) {
            Err(GenerateError::NoTemplates(NodeClass::Connector)) => {}
            other => panic!("expected missing-template error, got {other:?}"),
        }
    }

    #[test]
    fn same_stream_same_plan_different_stream_differs() {
        let (_, seed_plan) = toy_seed(3);
        let cfg = GenConfig { seed: 11, ..GenConfig::default() };
        let lib = TemplateLibrary::builtin();
        let a = generate_plan(&seed_plan, &cfg, lib, &mut rng_for(11, 0)).unwrap();
        let b = generate_plan(&seed_plan, &cfg, lib, &mut rng_for(11, 0)).unwrap();
        let c = generate_plan(&seed_plan, &cfg, lib, &mut rng_for(11, 1)).unwrap();
        assert_eq!(
            graphml::graphml_string(&a.graph).unwrap(),
            graphml::graphml_string(&b.graph).unwrap()
        );
        assert_eq!(a.image.as_raw(), b.image.as_raw());
        assert_ne!(
            graphml::graphml_string(&a.graph).unwrap(),
            graphml::graphml_string(&c.graph).unwrap()
        );
    }

    #[test]
    fn wrong_stage_rejected() {
        let (_, mut seed_plan) = toy_seed(0);
        seed_plan.stage = Stage::Raw;
        let cfg = GenConfig::default();
        match generate_plan(&seed_plan, &cfg, TemplateLibrary::builtin(), &mut rng_for(0, 0)) {
            Err(GenerateError::WrongStage(Stage::Raw)) => {}
            other => panic!("expected stage error, got {other:?}"),
        }
    }

    #[test]
    fn corpus_round_robins_and_records_manifest() {
        let seeds = vec![toy_seed(0), toy_seed(1)];
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig { seed: 3, ..GenConfig::default() };
        let params = CorpusParams { target: 4, attempts_cap: 40, start_attempt: 0 };
        let mut reg = DedupRegistry::default();
        let report = generate_corpus(
            &seeds,
            &params,
            &cfg,
            TemplateLibrary::builtin(),
            &mut reg,
            dir.path(),
        )
        .unwrap();
        assert_eq!(report.accepted, 4);
        let entries = read_manifest(&dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(entries.len(), 4);
        let seed_ids: Vec<&str> = entries.iter().map(|e| e.seed_id.as_str()).collect();
        assert!(seed_ids.contains(&"seed_000") && seed_ids.contains(&"seed_001"));
        for e in &entries {
            assert!(dir.path().join(&e.image_path).exists());
            assert!(dir.path().join(&e.annotation_path).exists());
            let g = graphml::read_graphml(&dir.path().join(&e.annotation_path)).unwrap();
            assert_eq!(g.stage, Stage::Collapsed);
            assert!(crate::model::validate(&g).is_empty());
        }
        for w in entries.windows(2) {
            assert!(w[0].attempt < w[1].attempt);
        }
    }

    #[test]
    fn duplicate_attempts_are_rejected_not_written() {
        // delta 0 and a single template per pick makes every attempt from one
        // seed structurally identical: exactly one acceptance possible
        let seeds = vec![toy_seed(4)];
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenConfig { delta: 0.0, seed: 9, ..GenConfig::default() };
        let params = CorpusParams { target: 5, attempts_cap: 12, start_attempt: 0 };
        let mut reg = DedupRegistry::default();
        let report = generate_corpus(
            &seeds,
            &params,
            &cfg,
            TemplateLibrary::builtin(),
            &mut reg,
            dir.path(),
        )
        .unwrap();
        assert!(report.accepted < 5);
        assert!(report.rejected_structural + report.rejected_visual > 0);
        let entries = read_manifest(&dir.path().join("manifest.jsonl")).unwrap();
        assert_eq!(entries.len(), report.accepted);
    }

    #[test]
    fn deterministic_corpus_modulo_timestamps() {
        let seeds = vec![toy_seed(0), toy_seed(2)];
        let cfg = GenConfig { seed: 21, ..GenConfig::default() };
        let params = CorpusParams { target: 3, attempts_cap: 30, start_attempt: 0 };

        let run = || {
            let dir = tempfile::tempdir().unwrap();
            let mut reg = DedupRegistry::default();
            generate_corpus(&seeds, &params, &cfg, TemplateLibrary::builtin(), &mut reg, dir.path())
                .unwrap();
            let mut entries = read_manifest(&dir.path().join("manifest.jsonl")).unwrap();
            let images: Vec<Vec<u8>> = entries
                .iter()
                .map(|e| std::fs::read(dir.path().join(&e.image_path)).unwrap())
                .collect();
            let annots: Vec<String> = entries
                .iter()
                .map(|e| std::fs::read_to_string(dir.path().join(&e.annotation_path)).unwrap())
                .collect();
            for e in &mut entries {
                e.accepted_at = String::new();
            }
            (entries, images, annots)
        };
        assert_eq!(run(), run());
    }
}
