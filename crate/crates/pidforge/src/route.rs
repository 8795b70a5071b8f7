//! Orthogonal edge routing on a coarse occupancy grid.
//!
//! Every node box (inflated by one cell) blocks the grid except the two
//! boxes of the edge being routed. Paths are found with Dijkstra over
//! (cell, heading) states so that bends carry an extra cost; ties resolve
//! by cell coordinates, which keeps results independent of hash order.
//! When no path exists the edge falls back to an L-shaped route that may
//! cross obstacles and is flagged as such.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::geometry::{segment_window_exit, Segment};
use crate::model::{BBox, ProcessGraph};

#[derive(Debug, Clone)]
pub struct RouteConfig {
    /// routing grid pitch in px
    pub cell: f64,
    /// extra cost per 90-degree turn, in cell steps
    pub bend_penalty: u64,
}

impl Default for RouteConfig {
    fn default() -> Self {
        RouteConfig { cell: 10.0, bend_penalty: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedEdge {
    /// waypoints in px; endpoints lie on the two node box boundaries
    pub polyline: Vec<(f64, f64)>,
    /// true when the obstacle-avoiding search failed and an L-route was used
    pub fallback: bool,
}

// neighbor order is fixed (sorted by dx, dy) so tie-breaking is stable
const DIRS: [(i64, i64); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

struct Grid {
    w: i64,
    h: i64,
    cell: f64,
    blocked: Vec<bool>,
}

impl Grid {
    fn idx(&self, x: i64, y: i64) -> usize {
        (y * self.w + x) as usize
    }

    fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.w && y < self.h
    }

    /// grid cells intersecting [v1, v2], clamped
    fn range(&self, v1: f64, v2: f64, max: i64) -> (i64, i64) {
        let c0 = (v1 / self.cell).floor() as i64;
        let c1 = ((v2 / self.cell).ceil() as i64 - 1).max(c0);
        (c0.clamp(0, max - 1), c1.clamp(0, max - 1))
    }

    fn set_box(&mut self, b: &BBox, inflate: f64, value: bool) {
        let (x0, x1) = self.range(b.x1 - inflate, b.x2 + inflate, self.w);
        let (y0, y1) = self.range(b.y1 - inflate, b.y2 + inflate, self.h);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let i = self.idx(x, y);
                self.blocked[i] = value;
            }
        }
    }

    fn cell_of(&self, p: (f64, f64)) -> (i64, i64) {
        (
            ((p.0 / self.cell).floor() as i64).clamp(0, self.w - 1),
            ((p.1 / self.cell).floor() as i64).clamp(0, self.h - 1),
        )
    }

    fn center(&self, c: (i64, i64)) -> (f64, f64) {
        ((c.0 as f64 + 0.5) * self.cell, (c.1 as f64 + 0.5) * self.cell)
    }
}

/// Route all edges of `g` in storage order.
pub fn route_edges(g: &ProcessGraph, cfg: &RouteConfig) -> Vec<RoutedEdge> {
    let cell = cfg.cell.max(1.0);
    let w = ((g.canvas.0 as f64 / cell).ceil() as i64).max(1);
    let h = ((g.canvas.1 as f64 / cell).ceil() as i64).max(1);
    let mut base = Grid { w, h, cell, blocked: vec![false; (w * h) as usize] };
    for n in &g.nodes {
        base.set_box(&n.bbox, cell, true);
    }

    let mut out = Vec::with_capacity(g.edges.len());
    let mut work = Grid { w, h, cell, blocked: Vec::new() };
    for e in &g.edges {
        let a = g.node(&e.a).expect("validated endpoint");
        let b = g.node(&e.b).expect("validated endpoint");
        work.blocked.clear();
        work.blocked.extend_from_slice(&base.blocked);
        work.set_box(&a.bbox, cell, false);
        work.set_box(&b.bbox, cell, false);
        out.push(route_one(&work, &a.bbox, &b.bbox, cfg.bend_penalty));
    }
    out
}

fn route_one(grid: &Grid, a: &BBox, b: &BBox, bend_penalty: u64) -> RoutedEdge {
    let (ac, bc) = (a.center(), b.center());
    let start = grid.cell_of(ac);
    let goal = grid.cell_of(bc);

    if start == goal {
        return finish(vec![ac, bc], a, b, false);
    }

    match dijkstra(grid, start, goal, bend_penalty) {
        Some(cells) => {
            let mut pts: Vec<(f64, f64)> = cells.into_iter().map(|c| grid.center(c)).collect();
            simplify(&mut pts);
            finish(pts, a, b, false)
        }
        None => {
            let corner = (bc.0, ac.1);
            let mut pts = vec![ac, corner, bc];
            simplify(&mut pts);
            finish(pts, a, b, true)
        }
    }
}

fn dijkstra(
    grid: &Grid,
    start: (i64, i64),
    goal: (i64, i64),
    bend_penalty: u64,
) -> Option<Vec<(i64, i64)>> {
    let n = (grid.w * grid.h) as usize;
    let mut dist = vec![u64::MAX; n * 4];
    let mut prev: Vec<u32> = vec![u32::MAX; n * 4];
    let mut heap = BinaryHeap::new();

    for (d, (dx, dy)) in DIRS.iter().enumerate() {
        let (x, y) = (start.0 + dx, start.1 + dy);
        if grid.in_bounds(x, y) && !grid.blocked[grid.idx(x, y)] {
            let s = grid.idx(x, y) * 4 + d;
            dist[s] = 1;
            heap.push(Reverse((1u64, x, y, d as u8)));
        }
    }

    let mut goal_state = None;
    while let Some(Reverse((cost, x, y, d))) = heap.pop() {
        let state = grid.idx(x, y) * 4 + d as usize;
        if cost > dist[state] {
            continue;
        }
        if (x, y) == goal {
            goal_state = Some(state);
            break;
        }
        for (nd, (dx, dy)) in DIRS.iter().enumerate() {
            let (nx, ny) = (x + dx, y + dy);
            if !grid.in_bounds(nx, ny) || grid.blocked[grid.idx(nx, ny)] {
                continue;
            }
            let step = if nd == d as usize { 1 } else { 1 + bend_penalty };
            let nc = cost + step;
            let ns = grid.idx(nx, ny) * 4 + nd;
            if nc < dist[ns] {
                dist[ns] = nc;
                prev[ns] = state as u32;
                heap.push(Reverse((nc, nx, ny, nd as u8)));
            }
        }
    }

    let mut state = goal_state?;
    let mut cells = Vec::new();
    loop {
        let cell_idx = (state / 4) as i64;
        cells.push((cell_idx % grid.w, cell_idx / grid.w));
        if prev[state] == u32::MAX {
            break;
        }
        state = prev[state] as usize;
    }
    cells.push(start);
    cells.reverse();
    Some(cells)
}

/// Drop interior points of collinear runs.
fn simplify(pts: &mut Vec<(f64, f64)>) {
    if pts.len() < 3 {
        return;
    }
    let mut keep = vec![pts[0]];
    for i in 1..pts.len() - 1 {
        let p = keep.last().unwrap();
        let q = pts[i];
        let r = pts[i + 1];
        let cross = (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
        if cross.abs() > 1e-9 {
            keep.push(q);
        }
    }
    keep.push(*pts.last().unwrap());
    *pts = keep;
}

/// Trim both ends to the node box boundaries and package the result.
fn finish(mut pts: Vec<(f64, f64)>, a: &BBox, b: &BBox, fallback: bool) -> RoutedEdge {
    trim_start(&mut pts, a);
    pts.reverse();
    trim_start(&mut pts, b);
    pts.reverse();
    if pts.len() < 2 {
        // degenerate (boxes touch or contain each other): plain center link
        pts = vec![a.center(), b.center()];
    }
    RoutedEdge { polyline: pts, fallback }
}

fn trim_start(pts: &mut Vec<(f64, f64)>, b: &BBox) {
    let mut last_inside = None;
    for (i, p) in pts.iter().enumerate() {
        if b.contains_point(p.0, p.1) {
            last_inside = Some(i);
        } else {
            break;
        }
    }
    let Some(k) = last_inside else { return };
    if k + 1 >= pts.len() {
        pts.clear();
        return;
    }
    let seg = Segment { a: pts[k], b: pts[k + 1] };
    let cut = segment_window_exit(&seg, b)
        .first()
        .map(|(p, _)| *p)
        .unwrap_or(pts[k]);
    pts.drain(..k);
    pts[0] = cut;
}
