//! Deterministic fixture builders shared by the test-suite, the benchmark
//! harness, and the bundled demo seeds. Everything here is seeded: the same
//! arguments always build the same graph.

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{
    BBox, Edge, EdgeClass, Node, NodeClass, ProcessGraph, Stage, PHYSICAL_CLASSES,
};
use crate::templates::TemplateLibrary;

fn rng_for(tag: u64, seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tag);
    rng
}

fn owned_key(e: &Edge) -> (String, String) {
    let (a, b) = e.key();
    (a.to_string(), b.to_string())
}

fn pick_class(rng: &mut ChaCha8Rng) -> NodeClass {
    PHYSICAL_CLASSES[rng.random_range(0..PHYSICAL_CLASSES.len())]
}

fn nominal_size(cls: NodeClass) -> (f64, f64) {
    TemplateLibrary::builtin().for_class(cls)[0].size
}

/// Small collapsed seed plan on a 5x4 placement grid (canvas 1200x1000).
/// Grid pitch exceeds the largest symbol plus twice the default jitter, so
/// layout perturbation can never produce overlapping boxes.
pub fn toy_seed(idx: u32) -> (String, ProcessGraph) {
    let mut rng = rng_for(0xA0, idx as u64);
    let mut g = ProcessGraph::new((1200, 1000), Stage::Collapsed);

    let mut cells: Vec<(i64, i64)> = (0..5).flat_map(|c| (0..4).map(move |r| (c, r))).collect();
    cells.shuffle(&mut rng);
    let n = rng.random_range(9..=12);
    let mut chosen: Vec<(i64, i64)> = cells.into_iter().take(n).collect();
    chosen.sort();

    let mut classes: Vec<NodeClass> = PHYSICAL_CLASSES.to_vec();
    classes.shuffle(&mut rng);
    for (i, &(c, r)) in chosen.iter().enumerate() {
        let cls = classes[i % classes.len()];
        let (w, h) = nominal_size(cls);
        let (cx, cy) = (150.0 + c as f64 * 220.0, 150.0 + r as f64 * 220.0);
        g.nodes.push(Node::new(
            format!("n{i:02}"),
            cls,
            BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
        ));
    }

    // spanning tree by nearest cell distance, then a few extra local edges
    let dist = |a: (i64, i64), b: (i64, i64)| (a.0 - b.0).abs() + (a.1 - b.1).abs();
    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    for _ in 1..n {
        let mut best: Option<(i64, usize, usize)> = None;
        for i in 0..n {
            if in_tree[i] {
                continue;
            }
            for j in 0..n {
                if !in_tree[j] {
                    continue;
                }
                let d = dist(chosen[i], chosen[j]);
                if best.map_or(true, |(bd, bi, bj)| (d, i, j) < (bd, bi, bj)) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.unwrap();
        in_tree[i] = true;
        let cls = if rng.random_bool(0.8) { EdgeClass::Solid } else { EdgeClass::NonSolid };
        g.edges.push(Edge::new(format!("n{j:02}"), format!("n{i:02}"), cls));
    }
    for i in 0..n {
        for j in i + 1..n {
            if dist(chosen[i], chosen[j]) == 1
                && !g.edges.iter().any(|e| {
                    e.key() == Edge::new(format!("n{i:02}"), format!("n{j:02}"), EdgeClass::Solid).key()
                })
                && rng.random_bool(0.25)
            {
                let cls =
                    if rng.random_bool(0.8) { EdgeClass::Solid } else { EdgeClass::NonSolid };
                g.edges.push(Edge::new(format!("n{i:02}"), format!("n{j:02}"), cls));
            }
        }
    }

    (format!("seed_{idx:03}"), g)
}

/// Random raw annotation graph with connector chains, junction fan-ins,
/// danglers, crossings and the occasional unanchored connector component.
/// At most 30 nodes; connector-and-crossing fraction between 50% and 65%.
pub fn random_raw_graph(seed: u64) -> ProcessGraph {
    let mut rng = rng_for(0xB0, seed);
    let mut g = ProcessGraph::new((1000, 800), Stage::Raw);

    let n_phys = rng.random_range(4..=8usize);
    let mut cells: Vec<(i64, i64)> = (0..6).flat_map(|c| (0..5).map(move |r| (c, r))).collect();
    cells.shuffle(&mut rng);
    for i in 0..n_phys {
        let (c, r) = cells[i];
        let size = rng.random_range(30.0..=60.0);
        g.nodes.push(Node::new(
            format!("p{i:02}"),
            pick_class(&mut rng),
            BBox::centered(75.0 + c as f64 * 150.0, 75.0 + r as f64 * 150.0, size),
        ));
    }

    let frac = rng.random_range(0.50..=0.65);
    let aux_total = ((n_phys as f64 * frac / (1.0 - frac)).round() as usize).max(n_phys);
    let aux_total = aux_total.min(30 - n_phys);

    let mut edge_keys = std::collections::BTreeSet::new();
    let mut aux = 0usize;
    let mut next_cid = 0usize;
    let rand_box = |rng: &mut ChaCha8Rng| {
        BBox::centered(
            rng.random_range(20.0..=980.0),
            rng.random_range(20.0..=780.0),
            8.0,
        )
    };
    let rand_cls = |rng: &mut ChaCha8Rng| {
        if rng.random_bool(0.7) {
            EdgeClass::Solid
        } else {
            EdgeClass::NonSolid
        }
    };

    while aux < aux_total {
        let roll = rng.random_range(0..100);
        if roll < 55 {
            // connector chain between two distinct physical nodes
            let len = rng.random_range(1..=3usize).min(aux_total - aux);
            let a = rng.random_range(0..n_phys);
            let b = {
                let mut b = rng.random_range(0..n_phys);
                while b == a {
                    b = rng.random_range(0..n_phys);
                }
                b
            };
            let mut prev = format!("p{a:02}");
            for _ in 0..len {
                let cid = format!("c{next_cid:02}");
                next_cid += 1;
                let bx = rand_box(&mut rng);
                g.nodes.push(Node::new(&cid, NodeClass::Connector, bx));
                let e = Edge::new(prev.clone(), cid.clone(), rand_cls(&mut rng));
                edge_keys.insert(owned_key(&e));
                g.edges.push(e);
                prev = cid;
                aux += 1;
            }
            let e = Edge::new(prev, format!("p{b:02}"), rand_cls(&mut rng));
            if edge_keys.insert(owned_key(&e)) {
                g.edges.push(e);
            }
        } else if roll < 70 {
            // dangling connector
            let a = rng.random_range(0..n_phys);
            let cid = format!("c{next_cid:02}");
            next_cid += 1;
            let bx = rand_box(&mut rng);
            g.nodes.push(Node::new(&cid, NodeClass::Connector, bx));
            let e = Edge::new(format!("p{a:02}"), cid, rand_cls(&mut rng));
            if edge_keys.insert(owned_key(&e)) {
                g.edges.push(e);
            }
            aux += 1;
        } else if roll < 85 && !g.nodes.is_empty() {
            // crossing wired to 3-4 distinct existing nodes
            let xid = format!("x{next_cid:02}");
            next_cid += 1;
            let bx = rand_box(&mut rng);
            let want = rng.random_range(3..=4usize);
            let mut picks: Vec<String> = g.nodes.iter().map(|n| n.id.clone()).collect();
            picks.shuffle(&mut rng);
            g.nodes.push(Node::new(&xid, NodeClass::Crossing, bx));
            for other in picks.into_iter().take(want) {
                let e = Edge::new(xid.clone(), other, rand_cls(&mut rng));
                if edge_keys.insert(owned_key(&e)) {
                    g.edges.push(e);
                }
            }
            aux += 1;
        } else if aux + 2 <= aux_total {
            // unanchored connector pair
            let c1 = format!("c{next_cid:02}");
            let c2 = format!("c{:02}", next_cid + 1);
            next_cid += 2;
            let (b1, b2) = (rand_box(&mut rng), rand_box(&mut rng));
            g.nodes.push(Node::new(&c1, NodeClass::Connector, b1));
            g.nodes.push(Node::new(&c2, NodeClass::Connector, b2));
            let e = Edge::new(c1, c2, rand_cls(&mut rng));
            edge_keys.insert(owned_key(&e));
            g.edges.push(e);
            aux += 2;
        }
    }

    // a few direct physical-physical edges
    for _ in 0..rng.random_range(0..=3) {
        let a = rng.random_range(0..n_phys);
        let b = rng.random_range(0..n_phys);
        if a == b {
            continue;
        }
        let e = Edge::new(format!("p{a:02}"), format!("p{b:02}"), rand_cls(&mut rng));
        if edge_keys.insert(owned_key(&e)) {
            g.edges.push(e);
        }
    }

    debug_assert!(crate::model::validate(&g).is_empty(), "{:?}", crate::model::validate(&g));
    g
}

/// Random stitched-stage graph with pairwise-distinct, non-overlapping boxes
/// and confidences in [0.5, 1].
pub fn random_stitched_graph(seed: u64) -> ProcessGraph {
    let mut rng = rng_for(0xC0, seed);
    let mut g = ProcessGraph::new((1500, 1500), Stage::Stitched);

    let mut cells: Vec<(i64, i64)> = (0..6).flat_map(|c| (0..6).map(move |r| (c, r))).collect();
    cells.shuffle(&mut rng);
    let n = rng.random_range(10..=20usize);
    for (i, &(c, r)) in cells.iter().take(n).enumerate() {
        let size = rng.random_range(30.0..=80.0);
        let jx = rng.random_range(-40.0..=40.0);
        let jy = rng.random_range(-40.0..=40.0);
        let mut node = Node::new(
            format!("s{i:02}"),
            pick_class(&mut rng),
            BBox::centered(125.0 + c as f64 * 250.0 + jx, 125.0 + r as f64 * 250.0 + jy, size),
        );
        node.conf = rng.random_range(0.5..=1.0);
        g.nodes.push(node);
    }

    let mut keys = std::collections::BTreeSet::new();
    for _ in 0..rng.random_range(n..=2 * n) {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let mut e = Edge::new(
            format!("s{a:02}"),
            format!("s{b:02}"),
            if rng.random_bool(0.7) { EdgeClass::Solid } else { EdgeClass::NonSolid },
        );
        e.conf = rng.random_range(0.5..=1.0);
        if keys.insert(owned_key(&e)) {
            g.edges.push(e);
        }
    }

    debug_assert!(crate::model::validate(&g).is_empty(), "{:?}", crate::model::validate(&g));
    g
}

/// Large collapsed plan for patch round-trips: nodes grow as a connected
/// blob on a 300px grid, so every edge spans exactly one grid step and no
/// node is isolated. All feature extents stay well under the patch stride.
pub fn big_plan(idx: u32, canvas: (u32, u32)) -> ProcessGraph {
    let mut rng = rng_for(0xD0, idx as u64);
    let mut g = ProcessGraph::new(canvas, Stage::Collapsed);

    let pitch = 300.0;
    let cols = ((canvas.0 as f64 - pitch) / pitch).floor() as i64;
    let rows = ((canvas.1 as f64 - pitch) / pitch).floor() as i64;
    let n = rng.random_range(25..=35usize).min((cols * rows) as usize);

    // frontier growth keeps the blob connected
    let start = (rng.random_range(0..cols), rng.random_range(0..rows));
    let mut chosen: Vec<(i64, i64)> = vec![start];
    let mut parent: Vec<usize> = vec![usize::MAX];
    while chosen.len() < n {
        let mut frontier: Vec<((i64, i64), usize)> = Vec::new();
        for (pi, &(c, r)) in chosen.iter().enumerate() {
            for (dc, dr) in [(-1i64, 0i64), (0, -1), (0, 1), (1, 0)] {
                let cand = (c + dc, r + dr);
                if cand.0 >= 0
                    && cand.1 >= 0
                    && cand.0 < cols
                    && cand.1 < rows
                    && !chosen.contains(&cand)
                    && !frontier.iter().any(|(f, _)| *f == cand)
                {
                    frontier.push((cand, pi));
                }
            }
        }
        let (cell, pi) = frontier[rng.random_range(0..frontier.len())];
        chosen.push(cell);
        parent.push(pi);
    }

    // 37px grid offset keeps box centers off every patch boundary line
    // (multiples of the 750px stride), so window membership is never a tie
    for (i, &(c, r)) in chosen.iter().enumerate() {
        let cls = pick_class(&mut rng);
        let (w, h) = nominal_size(cls);
        let (cx, cy) = (pitch + c as f64 * pitch + 37.0, pitch + r as f64 * pitch + 37.0);
        g.nodes.push(Node::new(
            format!("b{i:03}"),
            cls,
            BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0),
        ));
    }

    let mut keys = std::collections::BTreeSet::new();
    let push_edge = |g: &mut ProcessGraph, keys: &mut std::collections::BTreeSet<(String, String)>, i: usize, j: usize, rng: &mut ChaCha8Rng| {
        let cls = if rng.random_bool(0.75) { EdgeClass::Solid } else { EdgeClass::NonSolid };
        let e = Edge::new(format!("b{i:03}"), format!("b{j:03}"), cls);
        if keys.insert(owned_key(&e)) {
            g.edges.push(e);
        }
    };
    for i in 1..chosen.len() {
        let j = parent[i];
        push_edge(&mut g, &mut keys, i, j, &mut rng);
    }
    for i in 0..chosen.len() {
        for j in i + 1..chosen.len() {
            let d = (chosen[i].0 - chosen[j].0).abs() + (chosen[i].1 - chosen[j].1).abs();
            if d == 1 && rng.random_bool(0.3) {
                push_edge(&mut g, &mut keys, i, j, &mut rng);
            }
        }
    }

    debug_assert!(crate::model::validate(&g).is_empty(), "{:?}", crate::model::validate(&g));
    g
}
