//! Connector collapsing: contracts connector chains into direct edges
//! between physical components and removes crossing markers.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{validate, Edge, EdgeClass, NodeClass, ProcessGraph, Stage, Violation};

/// What to do with crossing nodes.
///
/// `Delete` removes the crossing and every incident edge. `Bridge` instead
/// reconnects the two straight-through pipe pairs, chosen by geometric
/// collinearity; crossings without exactly four incident edges fall back to
/// deletion with a warning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossingMode {
    #[default]
    Delete,
    Bridge,
}

#[derive(Debug, Clone, Default)]
pub struct CollapseOptions {
    pub crossing: CrossingMode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CollapseWarning {
    /// Connector reachable from a physical node but not on any chain
    /// between two physical nodes.
    DanglingConnector { id: String },
    /// Whole connector component with no physical anchor; dropped.
    UnanchoredConnectors { ids: Vec<String> },
    /// Bridge mode only: crossing without exactly 4 incident edges.
    UnbridgeableCrossing { id: String, degree: usize },
}

impl std::fmt::Display for CollapseWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CollapseWarning::DanglingConnector { id } => {
                write!(f, "dangling connector {id} dropped")
            }
            CollapseWarning::UnanchoredConnectors { ids } => {
                write!(f, "unanchored connector component dropped: {}", ids.join(", "))
            }
            CollapseWarning::UnbridgeableCrossing { id, degree } => {
                write!(f, "crossing {id} has degree {degree}, deleted instead of bridged")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CollapseError {
    #[error("expected a raw-stage graph, got stage {0}")]
    NotRaw(Stage),
    #[error("input graph is not well-formed: {0:?}")]
    Invalid(Vec<Violation>),
}

#[derive(Debug, Clone)]
pub struct CollapseOutcome {
    pub graph: ProcessGraph,
    pub warnings: Vec<CollapseWarning>,
    pub crossings_removed: usize,
    pub self_loops_dropped: usize,
    pub parallel_chains_dropped: usize,
}

pub fn collapse(g: &ProcessGraph) -> Result<CollapseOutcome, CollapseError> {
    collapse_with(g, &CollapseOptions::default())
}

/// One enumerated connector chain between two physical endpoints.
struct Candidate {
    p: String,
    q: String,
    /// sorted connector ids along the chain — the dedup key
    connectors: Vec<String>,
    /// edge classes along the chain, sorted (tie-break key only)
    classes_sorted: Vec<EdgeClass>,
    solid_votes: usize,
    total_votes: usize,
    min_conf: f64,
}

pub fn collapse_with(
    g: &ProcessGraph,
    opts: &CollapseOptions,
) -> Result<CollapseOutcome, CollapseError> {
    if g.stage != Stage::Raw {
        return Err(CollapseError::NotRaw(g.stage));
    }
    let violations = validate(g);
    if !violations.is_empty() {
        return Err(CollapseError::Invalid(violations));
    }

    let mut warnings = Vec::new();
    let mut edges: Vec<Option<Edge>> = g.edges.iter().cloned().map(Some).collect();
    let mut self_loops_dropped = 0usize;

    let crossings: Vec<&str> = g
        .nodes
        .iter()
        .filter(|n| n.cls == NodeClass::Crossing)
        .map(|n| n.id.as_str())
        .collect();
    let crossings_removed = crossings.len();

    if opts.crossing == CrossingMode::Bridge {
        bridge_crossings(g, &mut edges, &mut warnings, &mut self_loops_dropped);
    } else {
        let set: BTreeSet<&str> = crossings.iter().copied().collect();
        for e in edges.iter_mut() {
            if let Some(edge) = e {
                if set.contains(edge.a.as_str()) || set.contains(edge.b.as_str()) {
                    *e = None;
                }
            }
        }
    }

    // Chain enumeration on the crossing-free graph.
    let keep: Vec<&crate::model::Node> = g
        .nodes
        .iter()
        .filter(|n| n.cls != NodeClass::Crossing)
        .collect();
    let idx: BTreeMap<&str, usize> = keep.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let is_connector: Vec<bool> = keep.iter().map(|n| n.cls == NodeClass::Connector).collect();
    let live_edges: Vec<&Edge> = edges.iter().flatten().collect();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); keep.len()];
    for (ei, e) in live_edges.iter().enumerate() {
        let (ai, bi) = (idx[e.a.as_str()], idx[e.b.as_str()]);
        adj[ai].push((ei, bi));
        adj[bi].push((ei, ai));
    }
    for nbrs in &mut adj {
        nbrs.sort_by(|x, y| keep[x.1].id.cmp(&keep[y.1].id).then(x.0.cmp(&y.0)));
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    let mut used_connectors: BTreeSet<usize> = BTreeSet::new();
    let mut seen_self_loops: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();

    struct Walk<'a> {
        keep: &'a [&'a crate::model::Node],
        is_connector: &'a [bool],
        adj: &'a [Vec<(usize, usize)>],
        live: &'a [&'a Edge],
        start: usize,
        path: Vec<usize>,
        classes: Vec<EdgeClass>,
        min_conf: f64,
        visited: BTreeSet<usize>,
    }

    impl Walk<'_> {
        fn emit(
            &self,
            end: usize,
            candidates: &mut Vec<Candidate>,
            used: &mut BTreeSet<usize>,
            self_loops: &mut BTreeSet<(usize, Vec<usize>)>,
        ) {
            for &c in &self.path {
                used.insert(c);
            }
            let p = &self.keep[self.start].id;
            let q = &self.keep[end].id;
            if self.start == end {
                let mut key = self.path.clone();
                key.sort_unstable();
                self_loops.insert((self.start, key));
                return;
            }
            if p > q {
                return; // found again from the other endpoint
            }
            let mut connectors: Vec<String> =
                self.path.iter().map(|&c| self.keep[c].id.clone()).collect();
            connectors.sort();
            let mut classes_sorted = self.classes.clone();
            classes_sorted.sort();
            let solid_votes = self.classes.iter().filter(|c| **c == EdgeClass::Solid).count();
            candidates.push(Candidate {
                p: p.clone(),
                q: q.clone(),
                connectors,
                classes_sorted,
                solid_votes,
                total_votes: self.classes.len(),
                min_conf: self.min_conf,
            });
        }

        fn explore(
            &mut self,
            cur: usize,
            in_edge: usize,
            candidates: &mut Vec<Candidate>,
            used: &mut BTreeSet<usize>,
            self_loops: &mut BTreeSet<(usize, Vec<usize>)>,
        ) {
            for &(ei, nb) in &self.adj[cur].to_vec() {
                if ei == in_edge {
                    continue;
                }
                let e = self.live[ei];
                if self.is_connector[nb] {
                    if self.visited.contains(&nb) {
                        continue;
                    }
                    self.visited.insert(nb);
                    self.path.push(nb);
                    self.classes.push(e.cls);
                    let saved = self.min_conf;
                    self.min_conf = self.min_conf.min(e.conf);
                    self.explore(nb, ei, candidates, used, self_loops);
                    self.min_conf = saved;
                    self.classes.pop();
                    self.path.pop();
                    self.visited.remove(&nb);
                } else {
                    self.classes.push(e.cls);
                    let saved = self.min_conf;
                    self.min_conf = self.min_conf.min(e.conf);
                    self.emit(nb, candidates, used, self_loops);
                    self.min_conf = saved;
                    self.classes.pop();
                }
            }
        }
    }

    for start in 0..keep.len() {
        if is_connector[start] {
            continue;
        }
        let mut walk = Walk {
            keep: &keep,
            is_connector: &is_connector,
            adj: &adj,
            live: &live_edges,
            start,
            path: Vec::new(),
            classes: Vec::new(),
            min_conf: 1.0,
            visited: BTreeSet::new(),
        };
        walk.explore(start, usize::MAX, &mut candidates, &mut used_connectors, &mut seen_self_loops);
    }
    self_loops_dropped += seen_self_loops.len();

    // Parallel-chain dedup: per unordered endpoint pair keep the candidate
    // with the lexicographically smallest sorted connector-id list (class
    // multiset breaks any remaining tie), so the winner is a function of
    // the data, not of traversal order.
    candidates.sort_by(|x, y| {
        (&x.p, &x.q, &x.connectors, &x.classes_sorted).cmp(&(&y.p, &y.q, &y.connectors, &y.classes_sorted))
    });
    let mut final_edges: Vec<Edge> = Vec::new();
    let mut parallel_chains_dropped = 0usize;
    let mut last_pair: Option<(String, String)> = None;
    for cand in candidates {
        let pair = (cand.p.clone(), cand.q.clone());
        if last_pair.as_ref() == Some(&pair) {
            parallel_chains_dropped += 1;
            continue;
        }
        last_pair = Some(pair);
        let cls = if cand.solid_votes * 2 >= cand.total_votes {
            EdgeClass::Solid
        } else {
            EdgeClass::NonSolid
        };
        final_edges.push(Edge {
            a: cand.p,
            b: cand.q,
            cls,
            conf: cand.min_conf,
        });
    }

    // Unused connectors: dangling if their component touches a physical
    // node, otherwise the whole component is unanchored.
    let unused: Vec<usize> = (0..keep.len())
        .filter(|&i| is_connector[i] && !used_connectors.contains(&i))
        .collect();
    if !unused.is_empty() {
        let mut reported: BTreeSet<usize> = BTreeSet::new();
        for &c in &unused {
            if reported.contains(&c) {
                continue;
            }
            // component over connector-connector edges
            let mut comp = vec![c];
            let mut stack = vec![c];
            let mut comp_set = BTreeSet::from([c]);
            let mut anchored = false;
            while let Some(cur) = stack.pop() {
                for &(_, nb) in &adj[cur] {
                    if !is_connector[nb] {
                        anchored = true;
                    } else if comp_set.insert(nb) {
                        comp.push(nb);
                        stack.push(nb);
                    }
                }
            }
            if anchored {
                for &m in &comp {
                    if !used_connectors.contains(&m) && reported.insert(m) {
                        warnings.push(CollapseWarning::DanglingConnector {
                            id: keep[m].id.clone(),
                        });
                    }
                }
                // mark used members as handled so we don't revisit
                for &m in &comp {
                    reported.insert(m);
                }
            } else {
                let mut ids: Vec<String> = comp.iter().map(|&m| keep[m].id.clone()).collect();
                ids.sort();
                warnings.push(CollapseWarning::UnanchoredConnectors { ids });
                reported.extend(comp);
            }
        }
    }

    let mut out = ProcessGraph::new(g.canvas, Stage::Collapsed);
    out.nodes = g
        .nodes
        .iter()
        .filter(|n| n.cls.is_physical())
        .cloned()
        .collect();
    out.edges = final_edges;
    Ok(CollapseOutcome {
        graph: out,
        warnings,
        crossings_removed,
        self_loops_dropped,
        parallel_chains_dropped,
    })
}

/// Bridge mode: for each degree-4 crossing, pair the incident edges into
/// the two most anti-parallel couples and join each couple into one edge.
fn bridge_crossings(
    g: &ProcessGraph,
    edges: &mut Vec<Option<Edge>>,
    warnings: &mut Vec<CollapseWarning>,
    self_loops_dropped: &mut usize,
) {
    let centers: BTreeMap<&str, (f64, f64)> = g
        .nodes
        .iter()
        .map(|n| (n.id.as_str(), n.bbox.center()))
        .collect();
    let mut crossing_ids: Vec<&str> = g
        .nodes
        .iter()
        .filter(|n| n.cls == NodeClass::Crossing)
        .map(|n| n.id.as_str())
        .collect();
    crossing_ids.sort();

    for xid in crossing_ids {
        let mut incident: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| {
                e.as_ref()
                    .and_then(|e| e.touches(xid).then_some(i))
            })
            .collect();
        incident.sort_by(|&i, &j| {
            let a = edges[i].as_ref().unwrap().other(xid);
            let b = edges[j].as_ref().unwrap().other(xid);
            a.cmp(b).then(i.cmp(&j))
        });
        if incident.len() != 4 {
            warnings.push(CollapseWarning::UnbridgeableCrossing {
                id: xid.to_owned(),
                degree: incident.len(),
            });
            for i in incident {
                edges[i] = None;
            }
            continue;
        }

        let cx = centers[xid];
        let dir = |i: usize| -> (f64, f64) {
            let other = edges[i].as_ref().unwrap().other(xid);
            let oc = centers[other];
            let (dx, dy) = (oc.0 - cx.0, oc.1 - cx.1);
            let len = (dx * dx + dy * dy).sqrt();
            if len == 0.0 {
                (0.0, 0.0)
            } else {
                (dx / len, dy / len)
            }
        };
        let score = |i: usize, j: usize| -> f64 {
            let (a, b) = (dir(i), dir(j));
            1.0 + a.0 * b.0 + a.1 * b.1
        };
        let pairings = [[(0, 1), (2, 3)], [(0, 2), (1, 3)], [(0, 3), (1, 2)]];
        let best = pairings
            .iter()
            .map(|p| {
                p.iter()
                    .map(|&(i, j)| score(incident[i], incident[j]))
                    .sum::<f64>()
            })
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(i, _)| i)
            .unwrap();

        let mut new_edges = Vec::new();
        for &(i, j) in &pairings[best] {
            let (ei, ej) = (incident[i], incident[j]);
            let ea = edges[ei].as_ref().unwrap().clone();
            let eb = edges[ej].as_ref().unwrap().clone();
            let (na, nb) = (ea.other(xid).to_owned(), eb.other(xid).to_owned());
            if na == nb {
                *self_loops_dropped += 1;
                continue;
            }
            let cls = if ea.cls == eb.cls { ea.cls } else { EdgeClass::Solid };
            new_edges.push(Edge {
                a: na,
                b: nb,
                cls,
                conf: ea.conf.min(eb.conf),
            });
        }
        for i in incident {
            edges[i] = None;
        }
        edges.extend(new_edges.into_iter().map(Some));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BBox, Node};

    fn raw(nodes: &[(&str, NodeClass, (f64, f64))], edges: &[(&str, &str, EdgeClass)]) -> ProcessGraph {
        let mut g = ProcessGraph::new((2000, 2000), Stage::Raw);
        for (id, cls, (cx, cy)) in nodes {
            let size = if cls.is_physical() { 30.0 } else { 8.0 };
            g.nodes.push(Node::new(*id, *cls, BBox::centered(*cx, *cy, size)));
        }
        for (a, b, cls) in edges {
            g.edges.push(Edge::new(*a, *b, *cls));
        }
        g
    }

    fn pairs(g: &ProcessGraph) -> Vec<(String, String, EdgeClass)> {
        let mut v: Vec<_> = g
            .edges
            .iter()
            .map(|e| {
                let (a, b) = e.key();
                (a.to_owned(), b.to_owned(), e.cls)
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn majority_chain() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
                ("c1", NodeClass::Connector, (200.0, 100.0)),
                ("c2", NodeClass::Connector, (300.0, 100.0)),
            ],
            &[
                ("A", "c1", EdgeClass::Solid),
                ("c1", "c2", EdgeClass::Solid),
                ("c2", "B", EdgeClass::NonSolid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert_eq!(
            pairs(&got.graph),
            vec![("A".into(), "B".into(), EdgeClass::Solid)]
        );
        assert!(got.warnings.is_empty());
        assert_eq!(got.graph.stage, Stage::Collapsed);
    }

    #[test]
    fn majority_tie_resolves_solid() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
                ("c1", NodeClass::Connector, (300.0, 100.0)),
            ],
            &[
                ("A", "c1", EdgeClass::Solid),
                ("c1", "B", EdgeClass::NonSolid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert_eq!(got.graph.edges[0].cls, EdgeClass::Solid);
    }

    #[test]
    fn identity_without_connectors() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
            ],
            &[("A", "B", EdgeClass::NonSolid)],
        );
        let got = collapse(&g).unwrap();
        assert_eq!(got.graph.nodes, g.nodes);
        assert_eq!(pairs(&got.graph), pairs(&g));
        assert_eq!(got.graph.stage, Stage::Collapsed);
    }

    #[test]
    fn crossing_deleted_with_incident_edges() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 300.0)),
                ("B", NodeClass::Pump, (500.0, 300.0)),
                ("C", NodeClass::Tank, (300.0, 100.0)),
                ("D", NodeClass::Arrow, (300.0, 500.0)),
                ("X", NodeClass::Crossing, (300.0, 300.0)),
            ],
            &[
                ("A", "X", EdgeClass::Solid),
                ("X", "B", EdgeClass::Solid),
                ("C", "X", EdgeClass::Solid),
                ("X", "D", EdgeClass::Solid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert!(got.graph.edges.is_empty());
        assert_eq!(got.graph.nodes.len(), 4);
        assert_eq!(got.crossings_removed, 1);
    }

    #[test]
    fn crossing_bridged_by_collinearity() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 300.0)),
                ("B", NodeClass::Pump, (500.0, 300.0)),
                ("C", NodeClass::Tank, (300.0, 100.0)),
                ("D", NodeClass::Arrow, (300.0, 500.0)),
                ("X", NodeClass::Crossing, (300.0, 300.0)),
            ],
            &[
                ("A", "X", EdgeClass::Solid),
                ("X", "B", EdgeClass::Solid),
                ("C", "X", EdgeClass::NonSolid),
                ("X", "D", EdgeClass::NonSolid),
            ],
        );
        let opts = CollapseOptions { crossing: CrossingMode::Bridge };
        let got = collapse_with(&g, &opts).unwrap();
        assert_eq!(
            pairs(&got.graph),
            vec![
                ("A".into(), "B".into(), EdgeClass::Solid),
                ("C".into(), "D".into(), EdgeClass::NonSolid),
            ]
        );
    }

    #[test]
    fn dangling_connector_warns() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("c1", NodeClass::Connector, (200.0, 100.0)),
            ],
            &[("A", "c1", EdgeClass::Solid)],
        );
        let got = collapse(&g).unwrap();
        assert!(got.graph.edges.is_empty());
        assert_eq!(
            got.warnings,
            vec![CollapseWarning::DanglingConnector { id: "c1".into() }]
        );
    }

    #[test]
    fn unanchored_cycle_warns() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("c1", NodeClass::Connector, (200.0, 200.0)),
                ("c2", NodeClass::Connector, (300.0, 200.0)),
                ("c3", NodeClass::Connector, (250.0, 300.0)),
            ],
            &[
                ("c1", "c2", EdgeClass::Solid),
                ("c2", "c3", EdgeClass::Solid),
                ("c3", "c1", EdgeClass::Solid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert_eq!(
            got.warnings,
            vec![CollapseWarning::UnanchoredConnectors {
                ids: vec!["c1".into(), "c2".into(), "c3".into()]
            }]
        );
    }

    #[test]
    fn parallel_chains_keep_smallest_connector_list() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
                ("c1", NodeClass::Connector, (300.0, 50.0)),
                ("c2", NodeClass::Connector, (300.0, 150.0)),
            ],
            &[
                ("A", "c1", EdgeClass::Solid),
                ("c1", "B", EdgeClass::Solid),
                ("A", "c2", EdgeClass::NonSolid),
                ("c2", "B", EdgeClass::NonSolid),
            ],
        );
        let got = collapse(&g).unwrap();
        // chain through c1 sorts before chain through c2
        assert_eq!(
            pairs(&got.graph),
            vec![("A".into(), "B".into(), EdgeClass::Solid)]
        );
        assert_eq!(got.parallel_chains_dropped, 1);
    }

    #[test]
    fn direct_edge_beats_chain() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
                ("c1", NodeClass::Connector, (300.0, 150.0)),
            ],
            &[
                ("A", "B", EdgeClass::NonSolid),
                ("A", "c1", EdgeClass::Solid),
                ("c1", "B", EdgeClass::Solid),
            ],
        );
        let got = collapse(&g).unwrap();
        // the empty connector list sorts first, so the direct edge wins
        assert_eq!(
            pairs(&got.graph),
            vec![("A".into(), "B".into(), EdgeClass::NonSolid)]
        );
    }

    #[test]
    fn anchored_cycle_becomes_nothing() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("c1", NodeClass::Connector, (200.0, 100.0)),
                ("c2", NodeClass::Connector, (200.0, 200.0)),
            ],
            &[
                ("A", "c1", EdgeClass::Solid),
                ("c1", "c2", EdgeClass::Solid),
                ("c2", "A", EdgeClass::Solid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert!(got.graph.edges.is_empty());
        assert_eq!(got.self_loops_dropped, 1);
        assert!(got.warnings.is_empty());
    }

    #[test]
    fn junction_connector_forms_clique() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 300.0)),
                ("B", NodeClass::Pump, (500.0, 300.0)),
                ("C", NodeClass::Tank, (300.0, 100.0)),
                ("j", NodeClass::Connector, (300.0, 300.0)),
            ],
            &[
                ("A", "j", EdgeClass::Solid),
                ("j", "B", EdgeClass::Solid),
                ("j", "C", EdgeClass::NonSolid),
            ],
        );
        let got = collapse(&g).unwrap();
        assert_eq!(
            pairs(&got.graph),
            vec![
                ("A".into(), "B".into(), EdgeClass::Solid),
                ("A".into(), "C".into(), EdgeClass::Solid),
                ("B".into(), "C".into(), EdgeClass::Solid),
            ]
        );
    }

    #[test]
    fn idempotent_on_collapsed_shape() {
        let g = raw(
            &[
                ("A", NodeClass::Valve, (100.0, 100.0)),
                ("B", NodeClass::Pump, (500.0, 100.0)),
                ("C", NodeClass::Tank, (300.0, 400.0)),
            ],
            &[
                ("A", "B", EdgeClass::Solid),
                ("B", "C", EdgeClass::NonSolid),
            ],
        );
        let once = collapse(&g).unwrap().graph;
        let mut again_input = once.clone();
        again_input.stage = Stage::Raw;
        let twice = collapse(&again_input).unwrap().graph;
        assert_eq!(pairs(&once), pairs(&twice));
        assert_eq!(once.nodes, twice.nodes);
    }

    #[test]
    fn rejects_wrong_stage() {
        let mut g = raw(&[("A", NodeClass::Valve, (100.0, 100.0))], &[]);
        g.stage = Stage::Collapsed;
        assert!(matches!(
            collapse(&g).unwrap_err(),
            CollapseError::NotRaw(Stage::Collapsed)
        ));
    }

    #[test]
    fn majority_matches_vote_count_on_random_chains() {
        // brute-force oracle: for straight chains, the edge class must be
        // the mode of the chain classes with ties going to solid
        let mut state = 0x9e3779b9u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as usize
        };
        for _ in 0..200 {
            let len = 1 + next() % 6; // edges in chain
            let classes: Vec<EdgeClass> = (0..len)
                .map(|_| if next() % 2 == 0 { EdgeClass::Solid } else { EdgeClass::NonSolid })
                .collect();
            let mut nodes = vec![("P".to_owned(), NodeClass::Valve)];
            for i in 0..len - 1 {
                nodes.push((format!("c{i}"), NodeClass::Connector));
            }
            nodes.push(("Q".to_owned(), NodeClass::Pump));
            let mut g = ProcessGraph::new((5000, 200), Stage::Raw);
            for (i, (id, cls)) in nodes.iter().enumerate() {
                g.nodes.push(Node::new(
                    id.clone(),
                    *cls,
                    BBox::centered(60.0 * (i + 1) as f64, 100.0, 8.0),
                ));
            }
            for (i, cls) in classes.iter().enumerate() {
                g.edges.push(Edge::new(nodes[i].0.clone(), nodes[i + 1].0.clone(), *cls));
            }
            let got = collapse(&g).unwrap();
            assert_eq!(got.graph.edges.len(), 1);
            let solid = classes.iter().filter(|c| **c == EdgeClass::Solid).count();
            let expect = if solid * 2 >= classes.len() {
                EdgeClass::Solid
            } else {
                EdgeClass::NonSolid
            };
            assert_eq!(got.graph.edges[0].cls, expect, "chain {classes:?}");
        }
    }
}
