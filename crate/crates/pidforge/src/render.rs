//! Grayscale rasterizer for synthetic plans. Output is deterministic:
//! drawing is plain f64 sampling with no anti-aliasing, so identical inputs
//! produce identical pixels.

use image::{GrayImage, Luma};

use crate::model::{EdgeClass, ProcessGraph};
use crate::route::RoutedEdge;
use crate::templates::{Primitive, SymbolTemplate, TemplateLibrary};

pub const INK: u8 = 25;
pub const EDGE_WIDTH: f64 = 3.0;
pub const SYMBOL_WIDTH: f64 = 2.0;
/// dashed style for non-solid edges: px of ink, px of gap
pub const DASH_ON: f64 = 12.0;
pub const DASH_OFF: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct RenderConfig {
    pub background: u8,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig { background: 230 }
    }
}

/// Rasterize a plan: routed edges first, then symbols on top.
/// `routes` must parallel `g.edges`.
pub fn render(
    g: &ProcessGraph,
    routes: &[RoutedEdge],
    lib: &TemplateLibrary,
    cfg: &RenderConfig,
) -> GrayImage {
    assert_eq!(routes.len(), g.edges.len(), "one route per edge");
    let mut img = GrayImage::from_pixel(g.canvas.0, g.canvas.1, Luma([cfg.background]));

    for (e, r) in g.edges.iter().zip(routes) {
        let dash = match e.cls {
            EdgeClass::Solid => None,
            EdgeClass::NonSolid => Some((DASH_ON, DASH_OFF)),
        };
        stroke_polyline(&mut img, &r.polyline, EDGE_WIDTH, dash);
    }

    for n in &g.nodes {
        match n.template.as_deref().and_then(|id| lib.get(id)) {
            Some(t) => draw_template(&mut img, t, n.bbox.x1, n.bbox.y1, n.bbox.width(), n.bbox.height()),
            None => {
                // untemplated node: plain box outline keeps it visible
                let b = &n.bbox;
                let pts = [
                    (b.x1, b.y1),
                    (b.x2, b.y1),
                    (b.x2, b.y2),
                    (b.x1, b.y2),
                    (b.x1, b.y1),
                ];
                stroke_polyline(&mut img, &pts, SYMBOL_WIDTH, None);
            }
        }
    }
    img
}

fn draw_template(img: &mut GrayImage, t: &SymbolTemplate, x: f64, y: f64, w: f64, h: f64) {
    let map = |p: (f64, f64)| (x + p.0 * w, y + p.1 * h);
    for prim in &t.primitives {
        match prim {
            Primitive::Polyline(pts) => {
                let mapped: Vec<(f64, f64)> = pts.iter().map(|&p| map(p)).collect();
                stroke_polyline(img, &mapped, SYMBOL_WIDTH, None);
            }
            Primitive::Ellipse { cx, cy, rx, ry } => {
                stroke_ellipse(img, x + cx * w, y + cy * h, rx * w, ry * h, SYMBOL_WIDTH);
            }
            Primitive::FilledPolygon(pts) => {
                let mapped: Vec<(f64, f64)> = pts.iter().map(|&p| map(p)).collect();
                fill_polygon(img, &mapped);
            }
        }
    }
}

/// Stamp a square brush of side `width` centered on (cx, cy).
fn stamp(img: &mut GrayImage, cx: f64, cy: f64, width: f64) {
    let half = width / 2.0;
    let x0 = (cx - half).round() as i64;
    let y0 = (cy - half).round() as i64;
    let n = width.round().max(1.0) as i64;
    for dy in 0..n {
        for dx in 0..n {
            let (px, py) = (x0 + dx, y0 + dy);
            if px >= 0 && py >= 0 && (px as u32) < img.width() && (py as u32) < img.height() {
                img.put_pixel(px as u32, py as u32, Luma([INK]));
            }
        }
    }
}

fn draw_segment(img: &mut GrayImage, p: (f64, f64), q: (f64, f64), width: f64) {
    let len = ((q.0 - p.0).powi(2) + (q.1 - p.1).powi(2)).sqrt();
    let steps = (len * 2.0).ceil().max(1.0) as i64;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        stamp(img, p.0 + (q.0 - p.0) * t, p.1 + (q.1 - p.1) * t, width);
    }
}

/// Stroke a polyline; a dash pattern (on, off) carries its phase across
/// segment joints so corners do not restart the pattern.
fn stroke_polyline(img: &mut GrayImage, pts: &[(f64, f64)], width: f64, dash: Option<(f64, f64)>) {
    match dash {
        None => {
            for w in pts.windows(2) {
                draw_segment(img, w[0], w[1], width);
            }
        }
        Some((on, off)) => {
            let period = on + off;
            let mut phase = 0.0;
            for w in pts.windows(2) {
                let len = ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt();
                if len < 1e-12 {
                    continue;
                }
                let mut s = 0.0;
                while s < len {
                    let pos = (phase + s) % period;
                    if pos < on {
                        let run = (on - pos).min(len - s);
                        let t0 = s / len;
                        let t1 = (s + run) / len;
                        draw_segment(
                            img,
                            (
                                w[0].0 + (w[1].0 - w[0].0) * t0,
                                w[0].1 + (w[1].1 - w[0].1) * t0,
                            ),
                            (
                                w[0].0 + (w[1].0 - w[0].0) * t1,
                                w[0].1 + (w[1].1 - w[0].1) * t1,
                            ),
                            width,
                        );
                        s += run;
                    } else {
                        s += period - pos;
                    }
                }
                phase = (phase + len) % period;
            }
        }
    }
}

fn stroke_ellipse(img: &mut GrayImage, cx: f64, cy: f64, rx: f64, ry: f64, width: f64) {
    let steps = (std::f64::consts::TAU * rx.max(ry) * 2.0).ceil().max(8.0) as i64;
    for i in 0..=steps {
        let t = std::f64::consts::TAU * i as f64 / steps as f64;
        stamp(img, cx + rx * t.cos(), cy + ry * t.sin(), width);
    }
}

fn fill_polygon(img: &mut GrayImage, pts: &[(f64, f64)]) {
    if pts.len() < 3 {
        return;
    }
    let min_x = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor() as i64;
    let max_x = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    let min_y = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor() as i64;
    let max_y = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil() as i64;
    for py in min_y..=max_y {
        for px in min_x..=max_x {
            if px < 0 || py < 0 || px as u32 >= img.width() || py as u32 >= img.height() {
                continue;
            }
            let (x, y) = (px as f64 + 0.5, py as f64 + 0.5);
            // even-odd rule
            let mut inside = false;
            let n = pts.len();
            for i in 0..n {
                let (x1, y1) = pts[i];
                let (x2, y2) = pts[(i + 1) % n];
                if (y1 > y) != (y2 > y) {
                    let xi = x1 + (y - y1) / (y2 - y1) * (x2 - x1);
                    if x < xi {
                        inside = !inside;
                    }
                }
            }
            if inside {
                img.put_pixel(px as u32, py as u32, Luma([INK]));
            }
        }
    }
}
