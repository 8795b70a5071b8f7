//! Synthetic detector: corrupts ground-truth graphs into plausible
//! prediction graphs (box jitter, dropped and spurious detections, class
//! flips, confidence models) so the stitching and evaluation stages can be
//! exercised end to end without a trained model.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::geometry::clip_box;
use crate::model::{BBox, Edge, EdgeClass, Node, NodeClass, ProcessGraph, PHYSICAL_CLASSES};

#[derive(Debug, Clone)]
pub struct NoiseConfig {
    /// per-corner Gaussian jitter, px
    pub sigma: f64,
    /// probability a node detection is missed entirely
    pub p_drop: f64,
    /// Poisson rate of spurious detections per corrupt() call
    pub lambda_fp: f64,
    /// probability a surviving node gets a wrong class
    pub p_cls: f64,
    /// probability an edge between surviving nodes is missed
    pub p_edrop: f64,
    /// probability a surviving edge flips solid <-> non_solid
    pub p_eflip: f64,
    /// confidence range for true detections
    pub tp_conf: (f64, f64),
    /// confidence range for spurious detections
    pub fp_conf: (f64, f64),
    pub seed: u64,
}

impl NoiseConfig {
    pub fn zero(seed: u64) -> Self {
        NoiseConfig {
            sigma: 0.0,
            p_drop: 0.0,
            lambda_fp: 0.0,
            p_cls: 0.0,
            p_edrop: 0.0,
            p_eflip: 0.0,
            tp_conf: (0.6, 1.0),
            fp_conf: (0.05, 0.6),
            seed,
        }
    }

    /// One-knob noise model: all error rates scale linearly with `level`,
    /// so a higher level strictly dominates a lower one parameter-wise.
    pub fn from_level(level: f64, seed: u64) -> Self {
        assert!((0.0..=1.0).contains(&level), "noise level must be in [0,1]");
        NoiseConfig {
            sigma: 10.0 * level,
            p_drop: level,
            lambda_fp: 20.0 * level,
            p_cls: 0.5 * level,
            p_edrop: level,
            p_eflip: 0.5 * level,
            ..NoiseConfig::zero(seed)
        }
    }

    pub fn preset(name: &str, seed: u64) -> Option<Self> {
        let level = match name {
            "low" => 0.1,
            "med" => 0.2,
            "high" => 0.3,
            _ => return None,
        };
        Some(NoiseConfig::from_level(level, seed))
    }
}

/// uniform class other than `cls`, drawn from the physical vocabulary
fn flip_class(cls: NodeClass, rng: &mut ChaCha8Rng) -> NodeClass {
    let pool: Vec<NodeClass> =
        PHYSICAL_CLASSES.iter().copied().filter(|c| *c != cls).collect();
    pool[rng.random_range(0..pool.len())]
}

/// Corrupt a ground-truth graph into a prediction graph. Every step is
/// driven by the config seed alone, so identical inputs reproduce exactly.
pub fn corrupt(gt: &ProcessGraph, cfg: &NoiseConfig) -> ProcessGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let canvas = BBox::new(0.0, 0.0, gt.canvas.0 as f64, gt.canvas.1 as f64);
    let jitter = (cfg.sigma > 0.0).then(|| Normal::new(0.0, cfg.sigma).unwrap());

    let mut out = ProcessGraph::new(gt.canvas, gt.stage);
    for n in &gt.nodes {
        if cfg.p_drop > 0.0 && rng.random_bool(cfg.p_drop) {
            continue;
        }
        let bbox = match &jitter {
            Some(dist) => {
                let d: [f64; 4] = std::array::from_fn(|_| dist.sample(&mut rng));
                let (x1, x2) = (n.bbox.x1 + d[0], n.bbox.x2 + d[1]);
                let (y1, y2) = (n.bbox.y1 + d[2], n.bbox.y2 + d[3]);
                BBox::new(x1.min(x2), y1.min(y2), x1.max(x2), y1.max(y2))
            }
            None => n.bbox,
        };
        let Some(bbox) = clip_box(&bbox, &canvas) else {
            continue; // jittered out of the canvas: counts as a miss
        };
        let cls = if cfg.p_cls > 0.0 && rng.random_bool(cfg.p_cls) {
            flip_class(n.cls, &mut rng)
        } else {
            n.cls
        };
        let mut node = Node::new(&n.id, cls, bbox);
        node.conf = rng.random_range(cfg.tp_conf.0..=cfg.tp_conf.1);
        out.nodes.push(node);
    }

    let alive: std::collections::BTreeSet<&str> =
        out.nodes.iter().map(|n| n.id.as_str()).collect();
    for e in &gt.edges {
        if !alive.contains(e.a.as_str()) || !alive.contains(e.b.as_str()) {
            continue;
        }
        if cfg.p_edrop > 0.0 && rng.random_bool(cfg.p_edrop) {
            continue;
        }
        let cls = if cfg.p_eflip > 0.0 && rng.random_bool(cfg.p_eflip) {
            match e.cls {
                EdgeClass::Solid => EdgeClass::NonSolid,
                EdgeClass::NonSolid => EdgeClass::Solid,
            }
        } else {
            e.cls
        };
        let mut edge = Edge::new(e.a.clone(), e.b.clone(), cls);
        edge.conf = rng.random_range(cfg.tp_conf.0..=cfg.tp_conf.1);
        out.edges.push(edge);
    }

    if cfg.lambda_fp > 0.0 {
        let count = Poisson::new(cfg.lambda_fp).unwrap().sample(&mut rng) as usize;
        for i in 0..count {
            let cx = rng.random_range(0.0..canvas.x2);
            let cy = rng.random_range(0.0..canvas.y2);
            let w = rng.random_range(16.0..=120.0);
            let h = rng.random_range(16.0..=120.0);
            let raw = BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0);
            let Some(bbox) = clip_box(&raw, &canvas) else { continue };
            let cls = PHYSICAL_CLASSES[rng.random_range(0..PHYSICAL_CLASSES.len())];
            let mut node = Node::new(&format!("fp{i:03}"), cls, bbox);
            node.conf = rng.random_range(cfg.fp_conf.0..=cfg.fp_conf.1);
            out.nodes.push(node);
        }
    }
    out
}

fn splitmix(base: u64, index: u64) -> u64 {
    let mut z = base
        .wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Corrupt a whole patch set; each patch gets its own derived seed so the
/// result is independent of how the set is chunked for parallelism.
pub fn corrupt_patches(
    patches: &[((u32, u32), ProcessGraph)],
    cfg: &NoiseConfig,
) -> Vec<((u32, u32), ProcessGraph)> {
    patches
        .iter()
        .enumerate()
        .map(|(i, (origin, g))| {
            let sub = NoiseConfig { seed: splitmix(cfg.seed, i as u64), ..cfg.clone() };
            (*origin, corrupt(g, &sub))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{big_plan, random_stitched_graph};
    use crate::metrics::{evaluate_plan, EvalConfig};

    #[test]
    fn zero_noise_is_identity_up_to_confidence() {
        for seed in 0..5 {
            let gt = random_stitched_graph(seed);
            let pred = corrupt(&gt, &NoiseConfig::zero(seed));
            assert_eq!(pred.nodes.len(), gt.nodes.len());
            for (p, g) in pred.nodes.iter().zip(&gt.nodes) {
                assert_eq!(p.id, g.id);
                assert_eq!(p.cls, g.cls);
                assert_eq!(p.bbox, g.bbox);
                assert!((0.6..=1.0).contains(&p.conf));
            }
            assert_eq!(pred.edges.len(), gt.edges.len());
            let r = evaluate_plan(&pred, &gt, &EvalConfig::default());
            assert_eq!(r.node_map, 1.0);
            assert_eq!(r.edge_map, 1.0);
        }
    }

    #[test]
    fn full_drop_empties_graph() {
        let gt = random_stitched_graph(1);
        let cfg = NoiseConfig { p_drop: 1.0, ..NoiseConfig::zero(7) };
        let pred = corrupt(&gt, &cfg);
        assert!(pred.nodes.is_empty());
        assert!(pred.edges.is_empty());
    }

    #[test]
    fn jitter_tail_bounds() {
        let gt = random_stitched_graph(2);
        let cfg_base = NoiseConfig { sigma: 3.0, ..NoiseConfig::zero(0) };
        let mut deltas = Vec::new();
        for seed in 0..250u64 {
            let pred = corrupt(&gt, &NoiseConfig { seed, ..cfg_base.clone() });
            assert_eq!(pred.edges.len(), gt.edges.len(), "edge set untouched");
            for (p, g) in pred.nodes.iter().zip(&gt.nodes) {
                assert_eq!(p.cls, g.cls);
                deltas.extend([
                    p.bbox.x1 - g.bbox.x1,
                    p.bbox.y1 - g.bbox.y1,
                    p.bbox.x2 - g.bbox.x2,
                    p.bbox.y2 - g.bbox.y2,
                ]);
            }
        }
        assert!(deltas.len() > 10_000);
        let sigma = 3.0;
        assert!(deltas.iter().all(|d| d.abs() <= 6.0 * sigma), "6-sigma outlier");
        let within = deltas.iter().filter(|d| d.abs() <= 4.0 * sigma).count();
        assert!(within as f64 / deltas.len() as f64 > 0.999);
        let mean_abs = deltas.iter().map(|d| d.abs()).sum::<f64>() / deltas.len() as f64;
        // E|N(0, s)| = s*sqrt(2/pi) ~ 0.798 s
        assert!((mean_abs / sigma - 0.798).abs() < 0.05, "mean |delta| = {mean_abs}");
    }

    #[test]
    fn class_flip_always_changes_class() {
        let gt = random_stitched_graph(3);
        let cfg = NoiseConfig { p_cls: 1.0, ..NoiseConfig::zero(4) };
        let pred = corrupt(&gt, &cfg);
        for (p, g) in pred.nodes.iter().zip(&gt.nodes) {
            assert_ne!(p.cls, g.cls);
            assert!(p.cls.is_physical());
        }
    }

    #[test]
    fn spurious_rate_matches_poisson_mean() {
        let gt = ProcessGraph::new((1500, 1500), crate::model::Stage::Stitched);
        let mut total = 0usize;
        for seed in 0..200 {
            let cfg = NoiseConfig { lambda_fp: 5.0, ..NoiseConfig::zero(seed) };
            let pred = corrupt(&gt, &cfg);
            for n in &pred.nodes {
                assert!(n.cls.is_physical());
                assert!((0.05..=0.6).contains(&n.conf));
            }
            total += pred.nodes.len();
        }
        let mean = total as f64 / 200.0;
        assert!((4.3..=5.7).contains(&mean), "observed FP mean {mean}");
    }

    #[test]
    fn deterministic_per_seed() {
        let gt = random_stitched_graph(5);
        let cfg = NoiseConfig::from_level(0.2, 42);
        let a = crate::graphml::graphml_string(&corrupt(&gt, &cfg)).unwrap();
        let b = crate::graphml::graphml_string(&corrupt(&gt, &cfg)).unwrap();
        assert_eq!(a, b);
        let other = NoiseConfig { seed: 43, ..cfg };
        let c = crate::graphml::graphml_string(&corrupt(&gt, &other)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn corrupted_patches_stay_valid_and_noise_hurts() {
        use crate::patcher::{patch_plan, PatchSpec};
        use crate::stitcher::{stitch, StitchConfig};

        let plan = big_plan(3, (3000, 3000));
        let set = patch_plan(&plan, None, &PatchSpec::default()).unwrap();
        let patches: Vec<((u32, u32), ProcessGraph)> =
            set.patches.iter().map(|p| (p.origin, p.graph.clone())).collect();

        let noisy = corrupt_patches(&patches, &NoiseConfig::from_level(0.3, 9));
        for (_, g) in &noisy {
            assert!(crate::model::validate(g).is_empty());
        }
        let clean_stitched = stitch(&patches, 1500, plan.canvas, &StitchConfig::default());
        let noisy_stitched = stitch(&noisy, 1500, plan.canvas, &StitchConfig::default());
        let cfg = EvalConfig::default();
        let clean = evaluate_plan(&clean_stitched, &plan, &cfg);
        let noisy = evaluate_plan(&noisy_stitched, &plan, &cfg);
        assert_eq!(clean.edge_map, 1.0);
        assert!(noisy.edge_map < clean.edge_map, "noise must cost edge mAP");
        assert!(noisy.node_map < 1.0);
    }
}
