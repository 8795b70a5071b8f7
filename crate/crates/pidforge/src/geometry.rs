//! Box and segment arithmetic shared by metrics, patching, stitching, and
//! generation. All functions are pure.

use serde::{Deserialize, Serialize};

use crate::model::BBox;

/// Clipped boxes thinner than this are discarded: they sit below the
/// smallest symbol scale and destabilize IoU.
pub const MIN_CLIP_EXTENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Segment {
        Segment { a, b }
    }

    pub fn point_at(&self, t: f64) -> (f64, f64) {
        (
            self.a.0 + t * (self.b.0 - self.a.0),
            self.a.1 + t * (self.b.1 - self.a.1),
        )
    }
}

/// Window side, image coordinates (y grows downward, so `Top` is y = y1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Top => "top",
            Side::Bottom => "bottom",
        }
    }

    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Top => Side::Bottom,
            Side::Bottom => Side::Top,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

fn intersection_extent(a: &BBox, b: &BBox) -> (f64, f64) {
    let w = a.x2.min(b.x2) - a.x1.max(b.x1);
    let h = a.y2.min(b.y2) - a.y1.max(b.y1);
    (w, h)
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let (w, h) = intersection_extent(a, b);
    if w <= 0.0 || h <= 0.0 {
        return 0.0;
    }
    let inter = w * h;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Generalized IoU: IoU minus the fraction of the enclosing hull not covered
/// by the union. Range (-1, 1].
pub fn giou(a: &BBox, b: &BBox) -> f64 {
    let (w, h) = intersection_extent(a, b);
    let inter = if w <= 0.0 || h <= 0.0 { 0.0 } else { w * h };
    let union = a.area() + b.area() - inter;
    let hull_w = a.x2.max(b.x2) - a.x1.min(b.x1);
    let hull_h = a.y2.max(b.y2) - a.y1.min(b.y1);
    let hull = hull_w * hull_h;
    inter / union - (hull - union) / hull
}

/// Intersection of `b` with `window`, or `None` when the intersection is
/// empty or thinner than [`MIN_CLIP_EXTENT`] in either direction.
pub fn clip_box(b: &BBox, window: &BBox) -> Option<BBox> {
    let x1 = b.x1.max(window.x1);
    let y1 = b.y1.max(window.y1);
    let x2 = b.x2.min(window.x2);
    let y2 = b.y2.min(window.y2);
    if x2 - x1 < MIN_CLIP_EXTENT || y2 - y1 < MIN_CLIP_EXTENT {
        None
    } else {
        Some(BBox::new(x1, y1, x2, y2))
    }
}

/// Distance from the box to the nearest window edge (0 when the box touches
/// or overhangs the boundary).
pub fn boundary_distance(b: &BBox, window: &BBox) -> f64 {
    let d = (b.x1 - window.x1)
        .min(window.x2 - b.x2)
        .min(b.y1 - window.y1)
        .min(window.y2 - b.y2);
    d.max(0.0)
}

/// Points where `s` crosses the window boundary, ordered along the segment
/// and tagged with the side crossed. Empty when the segment stays entirely
/// inside or entirely outside. Corner grazes resolve to the vertical side.
pub fn segment_window_exit(s: &Segment, window: &BBox) -> Vec<((f64, f64), Side)> {
    let dx = s.b.0 - s.a.0;
    let dy = s.b.1 - s.a.1;
    let mut t_enter = 0.0f64;
    let mut t_exit = 1.0f64;
    let mut enter_side = None;
    let mut exit_side = None;

    // (delta, start, lo bound, hi bound, lo side, hi side) per axis;
    // Left/Right processed first so corner ties resolve to vertical sides.
    let axes = [
        (dx, s.a.0, window.x1, window.x2, Side::Left, Side::Right),
        (dy, s.a.1, window.y1, window.y2, Side::Top, Side::Bottom),
    ];
    for (d, start, lo, hi, lo_side, hi_side) in axes {
        if d == 0.0 {
            if start < lo || start > hi {
                return Vec::new();
            }
            continue;
        }
        let (t_lo, t_hi, lo_side, hi_side) = if d > 0.0 {
            ((lo - start) / d, (hi - start) / d, lo_side, hi_side)
        } else {
            ((hi - start) / d, (lo - start) / d, hi_side, lo_side)
        };
        if t_lo > t_enter {
            t_enter = t_lo;
            enter_side = Some(lo_side);
        }
        if t_hi < t_exit {
            t_exit = t_hi;
            exit_side = Some(hi_side);
        }
    }
    if t_enter > t_exit {
        return Vec::new();
    }
    let mut out = Vec::new();
    if let Some(side) = enter_side {
        if t_enter > 0.0 {
            out.push((s.point_at(t_enter), side));
        }
    }
    if let Some(side) = exit_side {
        if t_exit < 1.0 {
            out.push((s.point_at(t_exit), side));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_identity_and_disjoint() {
        let a = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&a, &a), 1.0);
        let b = BBox::new(2.0, 0.0, 3.0, 1.0);
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_partial_overlap() {
        let a = BBox::new(0.0, 0.0, 2.0, 2.0);
        let b = BBox::new(1.0, 0.0, 3.0, 2.0);
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn giou_values() {
        let a = BBox::new(0.0, 0.0, 1.0, 1.0);
        assert_eq!(giou(&a, &a), 1.0);
        let b = BBox::new(2.0, 0.0, 3.0, 1.0);
        assert!((giou(&a, &b) - (-1.0 / 3.0)).abs() < 1e-12);
        let c = BBox::new(0.0, 0.0, 2.0, 2.0);
        let d = BBox::new(1.0, 0.0, 3.0, 2.0);
        assert!((giou(&c, &d) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn giou_never_exceeds_iou() {
        let mut k = 0u32;
        for _ in 0..500 {
            // cheap LCG so the sweep is reproducible without an rng dep here
            let mut next = || {
                k = k.wrapping_mul(1664525).wrapping_add(1013904223);
                (k >> 8) as f64 % 97.0
            };
            let a = {
                let (x, y, w, h) = (next(), next(), next() + 1.0, next() + 1.0);
                BBox::new(x, y, x + w, y + h)
            };
            let b = {
                let (x, y, w, h) = (next(), next(), next() + 1.0, next() + 1.0);
                BBox::new(x, y, x + w, y + h)
            };
            assert!(giou(&a, &b) <= iou(&a, &b) + 1e-12);
            assert!((giou(&a, &b) - giou(&b, &a)).abs() < 1e-12);
            assert!((iou(&a, &b) - iou(&b, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn giou_decreases_with_separation() {
        let a = BBox::new(0.0, 0.0, 10.0, 10.0);
        let mut last = 1.0;
        for step in 0..60 {
            let b = a.translated(15.0 * step as f64, 0.0);
            let v = giou(&a, &b);
            assert!(v <= last + 1e-12);
            last = v;
        }
        assert!(last < -0.9);
    }

    #[test]
    fn clip_cases() {
        let w = BBox::new(0.0, 0.0, 750.0, 750.0);
        let inside = BBox::new(10.0, 10.0, 50.0, 50.0);
        assert_eq!(clip_box(&inside, &w), Some(inside));
        let outside = BBox::new(800.0, 800.0, 900.0, 900.0);
        assert_eq!(clip_box(&outside, &w), None);
        let straddle = BBox::new(700.0, 700.0, 800.0, 800.0);
        assert_eq!(
            clip_box(&straddle, &w),
            Some(BBox::new(700.0, 700.0, 750.0, 750.0))
        );
        let sliver = BBox::new(749.5, 10.0, 900.0, 50.0);
        assert_eq!(clip_box(&sliver, &w), None);
    }

    #[test]
    fn exit_right_side() {
        let s = Segment::new((100.0, 100.0), (2000.0, 100.0));
        let w = BBox::new(0.0, 0.0, 1500.0, 1500.0);
        let hits = segment_window_exit(&s, &w);
        assert_eq!(hits.len(), 1);
        let ((x, y), side) = hits[0];
        assert_eq!((x, y), (1500.0, 100.0));
        assert_eq!(side, Side::Right);
    }

    #[test]
    fn exit_none_inside_or_outside() {
        let w = BBox::new(0.0, 0.0, 10.0, 10.0);
        let inside = Segment::new((2.0, 2.0), (8.0, 8.0));
        assert!(segment_window_exit(&inside, &w).is_empty());
        let outside = Segment::new((-10.0, 5.0), (-10.0, 20.0));
        assert!(segment_window_exit(&outside, &w).is_empty());
    }

    #[test]
    fn exit_through_two_sides() {
        let w = BBox::new(0.0, 0.0, 10.0, 10.0);
        let through = Segment::new((-5.0, 5.0), (15.0, 5.0));
        let hits = segment_window_exit(&through, &w);
        assert_eq!(hits.len(), 2);
        assert_eq!(hits[0], ((0.0, 5.0), Side::Left));
        assert_eq!(hits[1], ((10.0, 5.0), Side::Right));
    }

    #[test]
    fn boundary_distance_clamps() {
        let w = BBox::new(0.0, 0.0, 1500.0, 1500.0);
        let middle = BBox::new(700.0, 700.0, 800.0, 800.0);
        assert_eq!(boundary_distance(&middle, &w), 700.0);
        let touching = BBox::new(0.0, 700.0, 60.0, 760.0);
        assert_eq!(boundary_distance(&touching, &w), 0.0);
        let overhang = BBox::new(-20.0, 700.0, 60.0, 760.0);
        assert_eq!(boundary_distance(&overhang, &w), 0.0);
    }
}
