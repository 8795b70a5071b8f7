//! Merges per-patch prediction graphs back into one plan-level graph:
//! boundary confidence attenuation, cross-patch duplicate fusion (NMS then
//! weighted box fusion), border-node welding, and final cleanup. Every
//! greedy step runs in a total deterministic order (confidence descending,
//! then patch index, then node id), so identical inputs give identical
//! output.

use std::collections::BTreeMap;

use crate::geometry::{boundary_distance, iou, Side};
use crate::model::{BBox, Edge, EdgeClass, Node, NodeClass, ProcessGraph, Stage};

#[derive(Debug, Clone)]
pub struct StitchConfig {
    /// attenuation margin d in px: confidence scales with
    /// min(1, boundary_distance / d)
    pub margin: f64,
    /// NMS suppression threshold for near-exact duplicates
    pub nms_iou: f64,
    /// WBF clustering threshold for moderate overlaps
    pub wbf_iou: f64,
    /// border-match tolerance along the boundary axis, px
    pub epsilon: f64,
    /// minimum confidence kept in the final graph
    pub floor: f64,
}

impl Default for StitchConfig {
    fn default() -> Self {
        StitchConfig { margin: 100.0, nms_iou: 0.9, wbf_iou: 0.55, epsilon: 20.0, floor: 0.05 }
    }
}

/// Scale down the confidence of non-border nodes by their distance to the
/// patch boundary: conf *= min(1, dist / d). Border nodes are exempt — they
/// live on the boundary by construction.
pub fn attenuate(g: &ProcessGraph, patch_px: u32, d: f64) -> ProcessGraph {
    let win = BBox::new(0.0, 0.0, patch_px as f64, patch_px as f64);
    let mut out = g.clone();
    for n in &mut out.nodes {
        if n.cls == NodeClass::Border {
            continue;
        }
        let scale = if d <= 0.0 { 1.0 } else { (boundary_distance(&n.bbox, &win) / d).min(1.0) };
        n.conf *= scale;
    }
    out
}

fn translate(g: &ProcessGraph, origin: (u32, u32)) -> ProcessGraph {
    let mut out = g.clone();
    for n in &mut out.nodes {
        n.bbox = n.bbox.translated(origin.0 as f64, origin.1 as f64);
    }
    out
}

#[derive(Debug)]
pub struct FuseResult {
    pub nodes: Vec<Node>,
    /// (patch index, source node id) -> fused node id, total over all
    /// non-border source nodes
    pub remap: BTreeMap<(usize, String), String>,
}

struct Member {
    patch: usize,
    id: String,
    bbox: BBox,
    conf: f64,
}

fn fused_box(members: &[&Member]) -> BBox {
    let total: f64 = members.iter().map(|m| m.conf).sum();
    let mut c = [0.0f64; 4];
    if total > 1e-12 {
        for m in members {
            let w = m.conf / total;
            c[0] += w * m.bbox.x1;
            c[1] += w * m.bbox.y1;
            c[2] += w * m.bbox.x2;
            c[3] += w * m.bbox.y2;
        }
    } else {
        let n = members.len() as f64;
        for m in members {
            c[0] += m.bbox.x1 / n;
            c[1] += m.bbox.y1 / n;
            c[2] += m.bbox.x2 / n;
            c[3] += m.bbox.y2 / n;
        }
    }
    BBox::new(c[0], c[1], c[2], c[3])
}

/// Cross-patch duplicate fusion over the pooled non-border nodes.
///
/// Per class, boxes are swept in (confidence desc, patch, id) order: NMS
/// folds near-exact duplicates (IoU >= nms_iou) into the higher-confidence
/// keeper, then the keepers cluster greedily at IoU >= wbf_iou against the
/// running fused box. A fused node's box is the confidence-weighted mean of
/// all member corners (keepers and their absorbed boxes alike) and its
/// confidence is the plain mean of member confidences.
pub fn fuse_nodes(patches: &[ProcessGraph], cfg: &StitchConfig) -> FuseResult {
    let mut by_class: BTreeMap<NodeClass, Vec<Member>> = BTreeMap::new();
    for (pi, g) in patches.iter().enumerate() {
        for n in &g.nodes {
            if n.cls == NodeClass::Border {
                continue;
            }
            by_class.entry(n.cls).or_default().push(Member {
                patch: pi,
                id: n.id.clone(),
                bbox: n.bbox,
                conf: n.conf,
            });
        }
    }

    let mut nodes = Vec::new();
    let mut remap = BTreeMap::new();
    let mut counter = 0usize;

    for (cls, mut members) in by_class {
        members.sort_by(|a, b| {
            b.conf
                .total_cmp(&a.conf)
                .then_with(|| a.patch.cmp(&b.patch))
                .then_with(|| a.id.cmp(&b.id))
        });

        // NMS: absorb near-exact duplicates into the first matching keeper
        struct Keeper {
            bbox: BBox,
            members: Vec<usize>,
        }
        let mut keepers: Vec<Keeper> = Vec::new();
        for (mi, m) in members.iter().enumerate() {
            match keepers.iter_mut().find(|k| iou(&m.bbox, &k.bbox) >= cfg.nms_iou) {
                Some(k) => k.members.push(mi),
                None => keepers.push(Keeper { bbox: m.bbox, members: vec![mi] }),
            }
        }

        // WBF: greedy clustering of keepers against the running fused box
        struct Cluster {
            bbox: BBox,
            members: Vec<usize>,
        }
        let mut clusters: Vec<Cluster> = Vec::new();
        for k in keepers {
            match clusters.iter_mut().find(|c| iou(&k.bbox, &c.bbox) >= cfg.wbf_iou) {
                Some(c) => {
                    c.members.extend(k.members.iter().copied());
                    let refs: Vec<&Member> = c.members.iter().map(|&i| &members[i]).collect();
                    c.bbox = fused_box(&refs);
                }
                None => {
                    let refs: Vec<&Member> = k.members.iter().map(|&i| &members[i]).collect();
                    clusters.push(Cluster { bbox: fused_box(&refs), members: k.members });
                }
            }
        }

        for c in clusters {
            let id = format!("f{counter:04}");
            counter += 1;
            let conf =
                c.members.iter().map(|&i| members[i].conf).sum::<f64>() / c.members.len() as f64;
            let mut node = Node::new(&id, cls, c.bbox);
            node.conf = conf;
            nodes.push(node);
            for &i in &c.members {
                remap.insert((members[i].patch, members[i].id.clone()), id.clone());
            }
        }
    }

    FuseResult { nodes, remap }
}

struct BorderHalf {
    patch: usize,
    id: String,
    /// true for vertical boundary lines (x = const)
    vertical: bool,
    line: f64,
    along: f64,
    side: Side,
    interior: String, // fused id of the inside endpoint
    cls: EdgeClass,
    conf: f64,
}

fn infer_side(local_center: (f64, f64), patch_px: f64) -> Side {
    let (cx, cy) = local_center;
    let dists = [
        (cx, Side::Left),
        (patch_px - cx, Side::Right),
        (cy, Side::Top),
        (patch_px - cy, Side::Bottom),
    ];
    // first minimum wins; vertical sides listed first so corner ties
    // resolve the same way the patcher's exit computation does
    let mut best = dists[0];
    for d in &dists[1..] {
        if d.0 < best.0 {
            best = *d;
        }
    }
    best.1
}

/// Weld cut edges back together. Border nodes sitting on the same boundary
/// line from complementary sides pair up greedily by distance along the
/// line (closest first, tolerance epsilon); each pair fuses its two
/// half-edges into one edge between the fused interior endpoints. Unmatched
/// border nodes simply vanish with their half-edges.
pub fn match_borders(
    patches: &[ProcessGraph],
    origins: &[(u32, u32)],
    patch_px: u32,
    remap: &BTreeMap<(usize, String), String>,
    cfg: &StitchConfig,
) -> Vec<Edge> {
    let p = patch_px as f64;
    let mut halves: Vec<BorderHalf> = Vec::new();

    for (pi, g) in patches.iter().enumerate() {
        let incidence = g.incidence();
        for n in &g.nodes {
            if n.cls != NodeClass::Border {
                continue;
            }
            let Some(edges) = incidence.get(n.id.as_str()) else { continue };
            if edges.len() != 1 {
                continue; // malformed border (corruption): drop
            }
            let e = &g.edges[edges[0]];
            let other = e.other(&n.id);
            let Some(interior) = remap.get(&(pi, other.to_string())) else {
                continue; // half-edge to another border or missing node
            };
            // box is stored in global coordinates at this point
            let (gx, gy) = n.bbox.center();
            let local = (gx - origins[pi].0 as f64, gy - origins[pi].1 as f64);
            let side = infer_side(local, p);
            let (vertical, line, along) = match side {
                Side::Left => (true, origins[pi].0 as f64, gy),
                Side::Right => (true, origins[pi].0 as f64 + p, gy),
                Side::Top => (false, origins[pi].1 as f64, gx),
                Side::Bottom => (false, origins[pi].1 as f64 + p, gx),
            };
            halves.push(BorderHalf {
                patch: pi,
                id: n.id.clone(),
                vertical,
                line,
                along,
                side,
                interior: interior.clone(),
                cls: e.cls,
                conf: e.conf,
            });
        }
    }

    // group by boundary line; window origins are integral so exact f64
    // keys are safe
    let mut groups: BTreeMap<(bool, u64), Vec<usize>> = BTreeMap::new();
    for (i, h) in halves.iter().enumerate() {
        groups.entry((h.vertical, h.line.to_bits())).or_default().push(i);
    }

    let mut out = Vec::new();
    for (_, group) in groups {
        // candidate pairs across complementary sides, nearest first
        let mut cands: Vec<(f64, usize, usize)> = Vec::new();
        for (a, &i) in group.iter().enumerate() {
            for &j in group.iter().skip(a + 1) {
                let (hi, hj) = (&halves[i], &halves[j]);
                if hi.side != hj.side.opposite() {
                    continue;
                }
                let d = (hi.along - hj.along).abs();
                if d <= cfg.epsilon {
                    cands.push((d, i, j));
                }
            }
        }
        cands.sort_by(|a, b| {
            a.0.total_cmp(&b.0).then_with(|| {
                let ka = (&halves[a.1].patch, &halves[a.1].id, &halves[a.2].patch, &halves[a.2].id);
                let kb = (&halves[b.1].patch, &halves[b.1].id, &halves[b.2].patch, &halves[b.2].id);
                ka.cmp(&kb)
            })
        });
        let mut used = std::collections::BTreeSet::new();
        for (_, i, j) in cands {
            if used.contains(&i) || used.contains(&j) {
                continue;
            }
            used.insert(i);
            used.insert(j);
            let (hi, hj) = (&halves[i], &halves[j]);
            let cls = match hi.conf.total_cmp(&hj.conf) {
                std::cmp::Ordering::Greater => hi.cls,
                std::cmp::Ordering::Less => hj.cls,
                std::cmp::Ordering::Equal => {
                    if hi.cls == hj.cls {
                        hi.cls
                    } else {
                        EdgeClass::Solid
                    }
                }
            };
            let mut e = Edge::new(hi.interior.clone(), hj.interior.clone(), cls);
            e.conf = (hi.conf + hj.conf) / 2.0;
            out.push(e);
        }
    }
    out
}

/// Cleanup pass: drop sub-floor nodes, self-loops and duplicate edges
/// (keeping the highest-confidence copy), then prune isolated nodes.
pub fn finalize(mut g: ProcessGraph, cfg: &StitchConfig) -> ProcessGraph {
    g.nodes.retain(|n| n.conf >= cfg.floor);
    let ids: std::collections::BTreeSet<&str> =
        g.nodes.iter().map(|n| n.id.as_str()).collect();
    let mut edges: Vec<Edge> = g
        .edges
        .iter()
        .filter(|e| e.a != e.b && ids.contains(e.a.as_str()) && ids.contains(e.b.as_str()))
        .cloned()
        .collect();

    // duplicate merge: highest confidence wins, deterministic tie-break
    edges.sort_by(|x, y| {
        x.key()
            .cmp(&y.key())
            .then_with(|| y.conf.total_cmp(&x.conf))
            .then_with(|| x.cls.as_str().cmp(y.cls.as_str()))
    });
    edges.dedup_by(|b, a| a.key() == b.key());
    g.edges = edges;

    let connected: std::collections::BTreeSet<String> = g
        .edges
        .iter()
        .flat_map(|e| [e.a.clone(), e.b.clone()])
        .collect();
    g.nodes.retain(|n| connected.contains(&n.id));
    g.stage = Stage::Stitched;
    g
}

/// Full pipeline: attenuate each patch, translate to plan coordinates, fuse
/// duplicate nodes, weld cut edges, clean up.
pub fn stitch(
    patches: &[((u32, u32), ProcessGraph)],
    patch_px: u32,
    canvas: (u32, u32),
    cfg: &StitchConfig,
) -> ProcessGraph {
    let origins: Vec<(u32, u32)> = patches.iter().map(|(o, _)| *o).collect();
    let global: Vec<ProcessGraph> = patches
        .iter()
        .map(|(origin, g)| translate(&attenuate(g, patch_px, cfg.margin), *origin))
        .collect();

    let fused = fuse_nodes(&global, cfg);
    let mut g = ProcessGraph::new(canvas, Stage::Stitched);
    g.nodes = fused.nodes;

    for (pi, pg) in global.iter().enumerate() {
        let border: std::collections::BTreeSet<&str> = pg
            .nodes
            .iter()
            .filter(|n| n.cls == NodeClass::Border)
            .map(|n| n.id.as_str())
            .collect();
        for e in &pg.edges {
            if border.contains(e.a.as_str()) || border.contains(e.b.as_str()) {
                continue;
            }
            let (Some(a), Some(b)) = (
                fused.remap.get(&(pi, e.a.clone())),
                fused.remap.get(&(pi, e.b.clone())),
            ) else {
                continue;
            };
            let mut edge = Edge::new(a.clone(), b.clone(), e.cls);
            edge.conf = e.conf;
            g.edges.push(edge);
        }
    }

    g.edges.extend(match_borders(&global, &origins, patch_px, &fused.remap, cfg));
    finalize(g, cfg)
}
