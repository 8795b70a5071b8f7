//! Splits a full collapsed plan into overlapping square patches. Edges cut
//! by a window boundary are truncated at the exact crossing point and capped
//! with a degree-1 border node, so the stitcher can later re-weld the two
//! halves by boundary coordinate.

use std::path::Path;

use image::{GenericImageView, GrayImage, Luma};
use serde::{Deserialize, Serialize};

use crate::geometry::{clip_box, segment_window_exit, Segment, Side};
use crate::graphml;
use crate::model::{BBox, Edge, Node, NodeClass, ProcessGraph, Stage};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatchSpec {
    /// patch side length in px
    pub patch: u32,
    /// window stride in px
    pub stride: u32,
    /// border-node box size in px
    pub border_size: f64,
    /// attenuation margin handed to the stitcher
    pub margin: f64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec { patch: 1500, stride: 750, border_size: 8.0, margin: 100.0 }
    }
}

impl PatchSpec {
    pub fn check(&self) -> Result<(), PatchError> {
        if self.stride == 0 || self.stride > self.patch {
            return Err(PatchError::BadSpec { patch: self.patch, stride: self.stride });
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PatchError {
    #[error("stride {stride} must be in 1..={patch}")]
    BadSpec { patch: u32, stride: u32 },
    #[error("patching needs a collapsed plan, got stage {0}")]
    WrongStage(Stage),
    #[error("edge geometry count {got} does not match edge count {want}")]
    GeometryMismatch { got: usize, want: usize },
    #[error(transparent)]
    Graphml(#[from] graphml::GraphmlError),
    #[error("write {path}: {message}")]
    Write { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorderRecord {
    /// id of the border node inside the patch graph
    pub node_id: String,
    pub side: Side,
    /// crossing point in plan-global coordinates (lies on the window edge)
    pub global: (f64, f64),
    /// index of the source edge in the original plan
    pub source_edge: usize,
}

#[derive(Debug, Clone)]
pub struct Patch {
    pub origin: (u32, u32),
    /// window-local graph, stage = patch
    pub graph: ProcessGraph,
    pub borders: Vec<BorderRecord>,
    /// ids kept only as clipped partial appearances (box center outside)
    pub partial_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PatchSet {
    pub spec: PatchSpec,
    pub canvas: (u32, u32),
    pub patches: Vec<Patch>,
}

/// Window origins per axis: multiples of the stride while a full patch still
/// fits strictly inside, then one final origin clamped to `extent - patch`
/// so the last window flushes the plan edge.
pub fn plan_windows(canvas_w: u32, canvas_h: u32, spec: &PatchSpec) -> Vec<(u32, u32)> {
    let axis = |extent: u32| -> Vec<u32> {
        if extent <= spec.patch {
            return vec![0];
        }
        let mut origins = Vec::new();
        let mut k = 0u32;
        while (k as u64 * spec.stride as u64 + spec.patch as u64) < extent as u64 {
            origins.push(k * spec.stride);
            k += 1;
        }
        origins.push(extent - spec.patch);
        origins
    };
    let xs = axis(canvas_w);
    let ys = axis(canvas_h);
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for &y0 in &ys {
        for &x0 in &xs {
            out.push((x0, y0));
        }
    }
    out
}

fn window_box(origin: (u32, u32), spec: &PatchSpec) -> BBox {
    BBox::new(
        origin.0 as f64,
        origin.1 as f64,
        (origin.0 + spec.patch) as f64,
        (origin.1 + spec.patch) as f64,
    )
}

/// Cut one window out of the plan graph.
///
/// Nodes whose box center falls in the half-open window are interior and
/// keep their (clipped) box; boxes that merely poke into the window stay as
/// clipped partial appearances for downstream fusion. Edges with one interior
/// endpoint are truncated at the first boundary crossing of their geometry
/// and capped with a border node; edges with no interior endpoint vanish.
pub fn extract_patch(
    g: &ProcessGraph,
    geometry: Option<&[Vec<(f64, f64)>]>,
    origin: (u32, u32),
    spec: &PatchSpec,
) -> Result<Patch, PatchError> {
    if g.stage != Stage::Collapsed {
        return Err(PatchError::WrongStage(g.stage));
    }
    if let Some(geo) = geometry {
        if geo.len() != g.edges.len() {
            return Err(PatchError::GeometryMismatch { got: geo.len(), want: g.edges.len() });
        }
    }
    spec.check()?;

    let win = window_box(origin, spec);
    let (ox, oy) = (origin.0 as f64, origin.1 as f64);
    let mut out = ProcessGraph::new((spec.patch, spec.patch), Stage::Patch);
    let mut partial_ids = Vec::new();
    let mut interior = std::collections::BTreeSet::new();

    for n in &g.nodes {
        let (cx, cy) = n.bbox.center();
        let is_interior = win.contains_point(cx, cy);
        let Some(clipped) = clip_box(&n.bbox, &win) else {
            continue;
        };
        if !is_interior {
            partial_ids.push(n.id.clone());
        } else {
            interior.insert(n.id.clone());
        }
        let mut kept = n.clone();
        kept.bbox = clipped.translated(-ox, -oy);
        out.nodes.push(kept);
    }

    let mut borders = Vec::new();
    for (idx, e) in g.edges.iter().enumerate() {
        let a_in = interior.contains(&e.a);
        let b_in = interior.contains(&e.b);
        match (a_in, b_in) {
            (true, true) => out.edges.push(e.clone()),
            (false, false) => {} // pass-through or fully outside: dropped
            _ => {
                let (inside_id, outside_id) = if a_in { (&e.a, &e.b) } else { (&e.b, &e.a) };
                let mut poly: Vec<(f64, f64)> = match geometry {
                    Some(geo) if geo[idx].len() >= 2 => geo[idx].clone(),
                    _ => Vec::new(),
                };
                if poly.is_empty() {
                    poly = vec![
                        g.node(inside_id).expect("endpoint").bbox.center(),
                        g.node(outside_id).expect("endpoint").bbox.center(),
                    ];
                } else if !a_in {
                    poly.reverse(); // walk from the interior endpoint
                }
                let Some((exit, side)) = first_exit(&poly, &win, g, inside_id, outside_id)
                else {
                    continue;
                };

                let bid = format!("bd{:03}", borders.len());
                let half = spec.border_size / 2.0;
                let raw = BBox::new(exit.0 - half, exit.1 - half, exit.0 + half, exit.1 + half);
                let Some(bbox) = clip_box(&raw, &win) else {
                    continue;
                };
                let mut bnode = Node::new(&bid, NodeClass::Border, bbox.translated(-ox, -oy));
                bnode.conf = e.conf;
                out.nodes.push(bnode);
                let mut edge = Edge::new(inside_id.clone(), bid.clone(), e.cls);
                edge.conf = e.conf;
                out.edges.push(edge);
                borders.push(BorderRecord { node_id: bid, side, global: exit, source_edge: idx });
            }
        }
    }

    Ok(Patch { origin, graph: out, borders, partial_ids })
}

/// First point where the polyline, walked from its interior end, crosses the
/// window boundary. Falls back to the straight center-center segment when
/// the polyline starts outside the window (clipped start stubs).
fn first_exit(
    poly: &[(f64, f64)],
    win: &BBox,
    g: &ProcessGraph,
    inside_id: &str,
    outside_id: &str,
) -> Option<((f64, f64), Side)> {
    let walk = |pts: &[(f64, f64)]| -> Option<((f64, f64), Side)> {
        if pts.is_empty() || !win.contains_point(pts[0].0, pts[0].1) {
            return None;
        }
        for w in pts.windows(2) {
            if !win.contains_point(w[1].0, w[1].1) {
                let seg = Segment { a: w[0], b: w[1] };
                return segment_window_exit(&seg, win).first().copied();
            }
        }
        None
    };
    walk(poly).or_else(|| {
        let a = g.node(inside_id).expect("endpoint").bbox.center();
        let b = g.node(outside_id).expect("endpoint").bbox.center();
        walk(&[a, b])
    })
}

/// Apply `plan_windows` + `extract_patch` over the whole plan.
pub fn patch_plan(
    g: &ProcessGraph,
    geometry: Option<&[Vec<(f64, f64)>]>,
    spec: &PatchSpec,
) -> Result<PatchSet, PatchError> {
    let windows = plan_windows(g.canvas.0, g.canvas.1, spec);
    let mut patches = Vec::with_capacity(windows.len());
    for origin in windows {
        patches.push(extract_patch(g, geometry, origin, spec)?);
    }
    Ok(PatchSet { spec: spec.clone(), canvas: g.canvas, patches })
}

/// Crop the window out of the plan image, padding with `background` where
/// the window hangs past the canvas (only when the canvas is smaller than
/// one patch).
pub fn crop_image(
    img: &GrayImage,
    origin: (u32, u32),
    spec: &PatchSpec,
    background: u8,
) -> GrayImage {
    let mut out = GrayImage::from_pixel(spec.patch, spec.patch, Luma([background]));
    let w = (img.width() - origin.0.min(img.width())).min(spec.patch);
    let h = (img.height() - origin.1.min(img.height())).min(spec.patch);
    let view = img.view(origin.0, origin.1, w, h);
    for (x, y, p) in view.pixels() {
        out.put_pixel(x, y, p);
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowIndex {
    pub schema_version: u32,
    pub patch: u32,
    pub stride: u32,
    pub border_size: f64,
    pub margin: f64,
    pub canvas: (u32, u32),
    pub windows: Vec<(u32, u32)>,
}

impl WindowIndex {
    pub fn spec(&self) -> PatchSpec {
        PatchSpec {
            patch: self.patch,
            stride: self.stride,
            border_size: self.border_size,
            margin: self.margin,
        }
    }
}

/// Write `<x0>_<y0>.graphml` per patch plus `windows.json` into `dir`.
pub fn write_patch_set(set: &PatchSet, dir: &Path) -> Result<(), PatchError> {
    std::fs::create_dir_all(dir).map_err(|e| PatchError::Write {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    for p in &set.patches {
        let name = format!("{}_{}.graphml", p.origin.0, p.origin.1);
        graphml::write_graphml(&p.graph, &dir.join(name))?;
    }
    let index = WindowIndex {
        schema_version: crate::manifest::SCHEMA_VERSION,
        patch: set.spec.patch,
        stride: set.spec.stride,
        border_size: set.spec.border_size,
        margin: set.spec.margin,
        canvas: set.canvas,
        windows: set.patches.iter().map(|p| p.origin).collect(),
    };
    let path = dir.join("windows.json");
    let text = serde_json::to_string_pretty(&index).expect("index serializes");
    std::fs::write(&path, text).map_err(|e| PatchError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn read_window_index(path: &Path) -> Result<WindowIndex, PatchError> {
    let text = std::fs::read_to_string(path).map_err(|e| PatchError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| PatchError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
