//! Plan-level evaluation: optimal node matching on generalized IoU,
//! per-class average precision for nodes (mAP@0.5) and for edges, where an
//! edge only counts as correct if both endpoints matched a ground-truth
//! node and the edge class agrees.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::assignment::solve_rectangular;
use crate::geometry::{giou, iou};
use crate::model::{EdgeClass, NodeClass, ProcessGraph};

/// Dummy assignment cost used to pad rectangular matching instances; any
/// value above the worst real cost (1 - gIoU <= 2) keeps dummies last.
const PAD_COST: f64 = 2.0;

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// IoU threshold for a node prediction to count as a true positive
    pub node_iou: f64,
    /// minimum gIoU for a matched node pair to anchor edge endpoints
    pub match_giou: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { node_iou: 0.5, match_giou: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    /// (pred id, gt id, gIoU) for every retained pair
    pub pairs: Vec<(String, String, f64)>,
    pub unmatched_pred: Vec<String>,
    pub unmatched_gt: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PRPoint {
    pub threshold: f64,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PRCurve {
    pub points: Vec<PRPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassEval {
    pub ap: f64,
    pub tp: usize,
    pub fp: usize,
    pub n_gt: usize,
    pub pr: PRCurve,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub node_map: f64,
    pub edge_map: f64,
    pub node_ap: BTreeMap<NodeClass, ClassEval>,
    pub edge_ap: BTreeMap<EdgeClass, ClassEval>,
    pub matched_nodes: usize,
    pub unmatched_pred: usize,
    pub unmatched_gt: usize,
    pub warnings: Vec<String>,
}

/// One-to-one node matching minimizing total (1 - gIoU); pairs that end up
/// with gIoU <= 0 are discarded afterwards. Nodes enter the cost matrix in
/// id order, so equal-cost solutions resolve the same way every run.
pub fn match_nodes(pred: &ProcessGraph, gt: &ProcessGraph) -> MatchResult {
    let mut preds: Vec<_> = pred.nodes.iter().collect();
    preds.sort_by(|a, b| a.id.cmp(&b.id));
    let mut gts: Vec<_> = gt.nodes.iter().collect();
    gts.sort_by(|a, b| a.id.cmp(&b.id));

    let cost: Vec<Vec<f64>> = preds
        .iter()
        .map(|p| gts.iter().map(|g| 1.0 - giou(&p.bbox, &g.bbox)).collect())
        .collect();
    let assign = solve_rectangular(&cost, gts.len(), PAD_COST);

    let mut pairs = Vec::new();
    let mut unmatched_pred = Vec::new();
    let mut gt_taken = vec![false; gts.len()];
    for (i, p) in preds.iter().enumerate() {
        match assign.get(i).copied().flatten() {
            Some(j) => {
                let g = giou(&p.bbox, &gts[j].bbox);
                if g > 0.0 {
                    pairs.push((p.id.clone(), gts[j].id.clone(), g));
                    gt_taken[j] = true;
                } else {
                    unmatched_pred.push(p.id.clone());
                }
            }
            None => unmatched_pred.push(p.id.clone()),
        }
    }
    let unmatched_gt = gts
        .iter()
        .enumerate()
        .filter(|(j, _)| !gt_taken[*j])
        .map(|(_, g)| g.id.clone())
        .collect();
    MatchResult { pairs, unmatched_pred, unmatched_gt }
}

/// All-point interpolated average precision. `dets` must already be sorted
/// by descending confidence; each entry is (confidence, is_true_positive).
/// Computed as the sum of enveloped precisions at true-positive ranks over
/// n_gt, which keeps the perfect-prediction case exactly 1.0.
fn average_precision(dets: &[(f64, bool)], n_gt: usize) -> (f64, PRCurve) {
    if n_gt == 0 {
        return (0.0, PRCurve::default());
    }
    let mut tp = 0usize;
    let mut raw = Vec::with_capacity(dets.len());
    for (rank, (conf, hit)) in dets.iter().enumerate() {
        if *hit {
            tp += 1;
        }
        raw.push((*conf, tp as f64 / n_gt as f64, tp as f64 / (rank + 1) as f64, *hit));
    }
    // monotone envelope over precision, right to left
    let mut env = vec![0.0f64; raw.len()];
    let mut best = 0.0f64;
    for i in (0..raw.len()).rev() {
        best = best.max(raw[i].2);
        env[i] = best;
    }
    let mut sum = 0.0f64;
    let mut points = Vec::with_capacity(raw.len());
    for (i, (conf, recall, precision, hit)) in raw.iter().enumerate() {
        if *hit {
            sum += env[i];
        }
        points.push(PRPoint { threshold: *conf, recall: *recall, precision: *precision });
    }
    (sum / n_gt as f64, PRCurve { points })
}

fn class_mean<K: Ord>(per_class: &BTreeMap<K, ClassEval>, pred_empty: bool) -> f64 {
    if per_class.is_empty() {
        // vacuous gt: perfect only when nothing was predicted either
        return if pred_empty { 1.0 } else { 0.0 };
    }
    per_class.values().map(|c| c.ap).sum::<f64>() / per_class.len() as f64
}

/// Detection-style AP per node class at the given IoU threshold, averaged
/// over the classes present in the ground truth.
pub fn node_map(
    pred: &ProcessGraph,
    gt: &ProcessGraph,
    iou_threshold: f64,
) -> (f64, BTreeMap<NodeClass, ClassEval>) {
    let mut gt_by_class: BTreeMap<NodeClass, Vec<usize>> = BTreeMap::new();
    for (i, n) in gt.nodes.iter().enumerate() {
        gt_by_class.entry(n.cls).or_default().push(i);
    }

    let mut out = BTreeMap::new();
    for (cls, gt_idx) in &gt_by_class {
        let mut preds: Vec<_> = pred.nodes.iter().filter(|n| n.cls == *cls).collect();
        preds.sort_by(|a, b| b.conf.total_cmp(&a.conf).then_with(|| a.id.cmp(&b.id)));

        let mut claimed = vec![false; gt_idx.len()];
        let mut dets = Vec::with_capacity(preds.len());
        for p in &preds {
            let mut best: Option<(f64, usize)> = None;
            for (k, &gi) in gt_idx.iter().enumerate() {
                if claimed[k] {
                    continue;
                }
                let v = iou(&p.bbox, &gt.nodes[gi].bbox);
                if best.map_or(true, |(bv, _)| v > bv) {
                    best = Some((v, k));
                }
            }
            let hit = match best {
                Some((v, k)) if v >= iou_threshold => {
                    claimed[k] = true;
                    true
                }
                _ => false,
            };
            dets.push((p.conf, hit));
        }
        let (ap, pr) = average_precision(&dets, gt_idx.len());
        let tp = dets.iter().filter(|d| d.1).count();
        out.insert(*cls, ClassEval { ap, tp, fp: dets.len() - tp, n_gt: gt_idx.len(), pr });
    }
    (class_mean(&out, pred.nodes.is_empty()), out)
}

/// AP per edge class. A predicted edge is a true positive only when both
/// endpoints matched ground-truth nodes at gIoU >= match_giou and those two
/// gt nodes are joined by a not-yet-claimed gt edge of the same class.
pub fn edge_map(
    pred: &ProcessGraph,
    gt: &ProcessGraph,
    cfg: &EvalConfig,
) -> (f64, BTreeMap<EdgeClass, ClassEval>, MatchResult) {
    let matching = match_nodes(pred, gt);
    let anchor: BTreeMap<&str, &str> = matching
        .pairs
        .iter()
        .filter(|(_, _, g)| *g >= cfg.match_giou)
        .map(|(p, g, _)| (p.as_str(), g.as_str()))
        .collect();

    let mut gt_by_class: BTreeMap<EdgeClass, Vec<usize>> = BTreeMap::new();
    for (i, e) in gt.edges.iter().enumerate() {
        gt_by_class.entry(e.cls).or_default().push(i);
    }

    let mut out = BTreeMap::new();
    for (cls, gt_idx) in &gt_by_class {
        let mut lookup: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (k, &gi) in gt_idx.iter().enumerate() {
            lookup.insert(gt.edges[gi].key(), k);
        }
        let mut preds: Vec<_> = pred.edges.iter().filter(|e| e.cls == *cls).collect();
        preds.sort_by(|a, b| b.conf.total_cmp(&a.conf).then_with(|| a.key().cmp(&b.key())));

        let mut claimed = vec![false; gt_idx.len()];
        let mut dets = Vec::with_capacity(preds.len());
        for e in &preds {
            let hit = match (anchor.get(e.a.as_str()), anchor.get(e.b.as_str())) {
                (Some(ga), Some(gb)) => {
                    let key = if ga <= gb { (*ga, *gb) } else { (*gb, *ga) };
                    match lookup.get(&key) {
                        Some(&k) if !claimed[k] => {
                            claimed[k] = true;
                            true
                        }
                        _ => false,
                    }
                }
                _ => false,
            };
            dets.push((e.conf, hit));
        }
        let (ap, pr) = average_precision(&dets, gt_idx.len());
        let tp = dets.iter().filter(|d| d.1).count();
        out.insert(*cls, ClassEval { ap, tp, fp: dets.len() - tp, n_gt: gt_idx.len(), pr });
    }
    (class_mean(&out, pred.edges.is_empty()), out, matching)
}

pub fn evaluate_plan(pred: &ProcessGraph, gt: &ProcessGraph, cfg: &EvalConfig) -> EvalReport {
    let mut warnings = Vec::new();
    if pred.canvas != gt.canvas {
        warnings.push(format!(
            "canvas mismatch: pred {:?} vs gt {:?}",
            pred.canvas, gt.canvas
        ));
    }
    let (node_mean, node_ap) = node_map(pred, gt, cfg.node_iou);
    let (edge_mean, edge_ap, matching) = edge_map(pred, gt, cfg);
    EvalReport {
        node_map: node_mean,
        edge_map: edge_mean,
        node_ap,
        edge_ap,
        matched_nodes: matching.pairs.len(),
        unmatched_pred: matching.unmatched_pred.len(),
        unmatched_gt: matching.unmatched_gt.len(),
        warnings,
    }
}
