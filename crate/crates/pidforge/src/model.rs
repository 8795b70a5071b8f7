//! Core data model: attributed process graphs with classed nodes, typed
//! edges, and a pipeline stage flag.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Node vocabulary. Seven physical component classes, two annotation-only
/// labels (`Connector`, `Crossing`) that are removed by collapsing, and the
/// pipeline-internal `Border` label used inside patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Valve,
    Pump,
    Instrumentation,
    General,
    Tank,
    Arrow,
    InletOutlet,
    Connector,
    Crossing,
    Border,
}

/// The seven classes that survive collapsing and count toward node mAP.
pub const PHYSICAL_CLASSES: [NodeClass; 7] = [
    NodeClass::Valve,
    NodeClass::Pump,
    NodeClass::Instrumentation,
    NodeClass::General,
    NodeClass::Tank,
    NodeClass::Arrow,
    NodeClass::InletOutlet,
];

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::Valve => "valve",
            NodeClass::Pump => "pump",
            NodeClass::Instrumentation => "instrumentation",
            NodeClass::General => "general",
            NodeClass::Tank => "tank",
            NodeClass::Arrow => "arrow",
            NodeClass::InletOutlet => "inlet_outlet",
            NodeClass::Connector => "connector",
            NodeClass::Crossing => "crossing",
            NodeClass::Border => "border",
        }
    }

    pub fn is_physical(self) -> bool {
        !matches!(
            self,
            NodeClass::Connector | NodeClass::Crossing | NodeClass::Border
        )
    }
}

impl fmt::Display for NodeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NodeClass {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "valve" => NodeClass::Valve,
            "pump" => NodeClass::Pump,
            "instrumentation" => NodeClass::Instrumentation,
            "general" => NodeClass::General,
            "tank" => NodeClass::Tank,
            "arrow" => NodeClass::Arrow,
            "inlet_outlet" => NodeClass::InletOutlet,
            "connector" => NodeClass::Connector,
            "crossing" => NodeClass::Crossing,
            "border" => NodeClass::Border,
            _ => return Err(UnknownLabel(s.to_owned())),
        })
    }
}

/// Edge vocabulary: exactly two values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeClass {
    Solid,
    NonSolid,
}

pub const EDGE_CLASSES: [EdgeClass; 2] = [EdgeClass::Solid, EdgeClass::NonSolid];

impl EdgeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeClass::Solid => "solid",
            EdgeClass::NonSolid => "non_solid",
        }
    }

    pub fn flipped(self) -> EdgeClass {
        match self {
            EdgeClass::Solid => EdgeClass::NonSolid,
            EdgeClass::NonSolid => EdgeClass::Solid,
        }
    }
}

impl fmt::Display for EdgeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EdgeClass {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "solid" => EdgeClass::Solid,
            "non_solid" => EdgeClass::NonSolid,
            _ => return Err(UnknownLabel(s.to_owned())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownLabel(pub String);

impl fmt::Display for UnknownLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown class label {:?}", self.0)
    }
}

impl std::error::Error for UnknownLabel {}

/// Axis-aligned box in pixel coordinates, origin top-left. Treated as
/// half-open `[x1,x2) x [y1,y2)` for area arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox { x1, y1, x2, y2 }
    }

    /// Square box of side `size` centered on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, size: f64) -> BBox {
        let h = size / 2.0;
        BBox::new(cx - h, cy - h, cx + h, cy + h)
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> BBox {
        BBox::new(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)
    }

    pub fn is_valid(&self) -> bool {
        [self.x1, self.y1, self.x2, self.y2]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
            && self.x1 < self.x2
            && self.y1 < self.y2
    }

    /// Half-open point membership: the left/top edges belong to the box,
    /// the right/bottom edges do not.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x1 && x < self.x2 && y >= self.y1 && y < self.y2
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x1 >= self.x1 && other.y1 >= self.y1 && other.x2 <= self.x2 && other.y2 <= self.y2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Raw,
    Collapsed,
    Patch,
    Stitched,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Collapsed => "collapsed",
            Stage::Patch => "patch",
            Stage::Stitched => "stitched",
        }
    }

    /// Classes that must not appear at this stage.
    pub fn forbidden(self) -> &'static [NodeClass] {
        match self {
            Stage::Raw => &[NodeClass::Border],
            Stage::Collapsed | Stage::Stitched => &[
                NodeClass::Connector,
                NodeClass::Crossing,
                NodeClass::Border,
            ],
            Stage::Patch => &[NodeClass::Connector, NodeClass::Crossing],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "raw" => Stage::Raw,
            "collapsed" => Stage::Collapsed,
            "patch" => Stage::Patch,
            "stitched" => Stage::Stitched,
            _ => return Err(UnknownLabel(s.to_owned())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub cls: NodeClass,
    pub bbox: BBox,
    /// 1.0 for ground truth; detector outputs carry their score here.
    pub conf: f64,
    /// Symbol template chosen during generation; render-time data, not
    /// persisted in annotation files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
}

impl Node {
    pub fn new(id: impl Into<String>, cls: NodeClass, bbox: BBox) -> Node {
        Node {
            id: id.into(),
            cls,
            bbox,
            conf: 1.0,
            template: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: String,
    pub b: String,
    pub cls: EdgeClass,
    pub conf: f64,
}

impl Edge {
    pub fn new(a: impl Into<String>, b: impl Into<String>, cls: EdgeClass) -> Edge {
        Edge {
            a: a.into(),
            b: b.into(),
            cls,
            conf: 1.0,
        }
    }

    /// Canonical unordered endpoint pair, for duplicate detection.
    pub fn key(&self) -> (&str, &str) {
        if self.a <= self.b {
            (&self.a, &self.b)
        } else {
            (&self.b, &self.a)
        }
    }

    pub fn touches(&self, id: &str) -> bool {
        self.a == id || self.b == id
    }

    pub fn other(&self, id: &str) -> &str {
        if self.a == id {
            &self.b
        } else {
            &self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// (width, height) in pixels.
    pub canvas: (u32, u32),
    pub stage: Stage,
}

impl ProcessGraph {
    pub fn new(canvas: (u32, u32), stage: Stage) -> ProcessGraph {
        ProcessGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            canvas,
            stage,
        }
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Id -> node index, for repeated lookups.
    pub fn node_index(&self) -> BTreeMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect()
    }

    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        let mut deg: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.id.as_str(), 0)).collect();
        for e in &self.edges {
            if let Some(d) = deg.get_mut(e.a.as_str()) {
                *d += 1;
            }
            if let Some(d) = deg.get_mut(e.b.as_str()) {
                *d += 1;
            }
        }
        deg
    }

    /// Adjacency list as indices into `self.edges`, keyed by node id.
    pub fn incidence(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut adj: BTreeMap<&str, Vec<usize>> =
            self.nodes.iter().map(|n| (n.id.as_str(), Vec::new())).collect();
        for (i, e) in self.edges.iter().enumerate() {
            if let Some(v) = adj.get_mut(e.a.as_str()) {
                v.push(i);
            }
            if let Some(v) = adj.get_mut(e.b.as_str()) {
                v.push(i);
            }
        }
        adj
    }
}

/// Structural rule violations reported by [`validate`]. Violations are data,
/// not errors: callers decide whether to refuse the graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    InvalidBox { node: String },
    BadNodeConfidence { node: String },
    BadEdgeConfidence { a: String, b: String },
    DuplicateNodeId { id: String },
    MissingEndpoint { a: String, b: String, missing: String },
    SelfLoop { id: String },
    DuplicateEdge { a: String, b: String },
    StageClass { node: String, cls: NodeClass, stage: Stage },
    BorderDegree { node: String, degree: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidBox { node } => write!(f, "node {node}: invalid bounding box"),
            Violation::BadNodeConfidence { node } => {
                write!(f, "node {node}: confidence outside [0,1]")
            }
            Violation::BadEdgeConfidence { a, b } => {
                write!(f, "edge ({a},{b}): confidence outside [0,1]")
            }
            Violation::DuplicateNodeId { id } => write!(f, "duplicate node id {id}"),
            Violation::MissingEndpoint { a, b, missing } => {
                write!(f, "edge ({a},{b}): endpoint {missing} not in graph")
            }
            Violation::SelfLoop { id } => write!(f, "self-loop at node {id}"),
            Violation::DuplicateEdge { a, b } => write!(f, "duplicate edge ({a},{b})"),
            Violation::StageClass { node, cls, stage } => {
                write!(f, "node {node}: class {cls} not allowed at stage {stage}")
            }
            Violation::BorderDegree { node, degree } => {
                write!(f, "border node {node}: degree {degree}, expected at most 1")
            }
        }
    }
}

/// Checks every type invariant and returns the full violation list (empty
/// means the graph is well-formed).
pub fn validate(g: &ProcessGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for n in &g.nodes {
        if !ids.insert(n.id.as_str()) {
            out.push(Violation::DuplicateNodeId { id: n.id.clone() });
        }
        if !n.bbox.is_valid() {
            out.push(Violation::InvalidBox { node: n.id.clone() });
        }
        if !(0.0..=1.0).contains(&n.conf) || !n.conf.is_finite() {
            out.push(Violation::BadNodeConfidence { node: n.id.clone() });
        }
        if g.stage.forbidden().contains(&n.cls) {
            out.push(Violation::StageClass {
                node: n.id.clone(),
                cls: n.cls,
                stage: g.stage,
            });
        }
    }
    let mut seen_pairs = BTreeSet::new();
    for e in &g.edges {
        for end in [&e.a, &e.b] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::MissingEndpoint {
                    a: e.a.clone(),
                    b: e.b.clone(),
                    missing: end.clone(),
                });
            }
        }
        if e.a == e.b {
            out.push(Violation::SelfLoop { id: e.a.clone() });
        }
        let (p, q) = e.key();
        if !seen_pairs.insert((p.to_owned(), q.to_owned())) {
            out.push(Violation::DuplicateEdge {
                a: p.to_owned(),
                b: q.to_owned(),
            });
        }
        if !(0.0..=1.0).contains(&e.conf) || !e.conf.is_finite() {
            out.push(Violation::BadEdgeConfidence {
                a: e.a.clone(),
                b: e.b.clone(),
            });
        }
    }
    let deg = g.degrees();
    for n in &g.nodes {
        if n.cls == NodeClass::Border {
            let d = deg.get(n.id.as_str()).copied().unwrap_or(0);
            if d > 1 {
                out.push(Violation::BorderDegree {
                    node: n.id.clone(),
                    degree: d,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub node_count: usize,
    pub edge_count: usize,
    /// degree -> number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    /// |E| / |V|, 0 when the graph is empty
    pub edge_density: f64,
    pub class_counts: BTreeMap<NodeClass, usize>,
}

pub fn compute_stats(g: &ProcessGraph) -> GraphStats {
    let mut histogram = BTreeMap::new();
    for (_, d) in g.degrees() {
        *histogram.entry(d).or_insert(0) += 1;
    }
    let mut class_counts = BTreeMap::new();
    for n in &g.nodes {
        *class_counts.entry(n.cls).or_insert(0) += 1;
    }
    let density = if g.nodes.is_empty() {
        0.0
    } else {
        g.edges.len() as f64 / g.nodes.len() as f64
    };
    GraphStats {
        node_count: g.nodes.len(),
        edge_count: g.edges.len(),
        degree_histogram: histogram,
        edge_density: density,
        class_counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boxed(i: usize) -> BBox {
        BBox::centered(100.0 * (i + 1) as f64, 100.0, 20.0)
    }

    fn graph_with(nodes: &[(&str, NodeClass)], edges: &[(&str, &str)]) -> ProcessGraph {
        let mut g = ProcessGraph::new((1000, 1000), Stage::Collapsed);
        for (i, (id, cls)) in nodes.iter().enumerate() {
            g.nodes.push(Node::new(*id, *cls, boxed(i)));
        }
        for (a, b) in edges {
            g.edges.push(Edge::new(*a, *b, EdgeClass::Solid));
        }
        g
    }

    #[test]
    fn stats_triangle() {
        let g = graph_with(
            &[
                ("a", NodeClass::Valve),
                ("b", NodeClass::Pump),
                ("c", NodeClass::Tank),
            ],
            &[("a", "b"), ("b", "c"), ("c", "a")],
        );
        let s = compute_stats(&g);
        assert_eq!(s.degree_histogram, BTreeMap::from([(2, 3)]));
        assert_eq!(s.edge_density, 1.0);
        assert_eq!(s.node_count, 3);
    }

    #[test]
    fn stats_empty() {
        let s = compute_stats(&ProcessGraph::new((10, 10), Stage::Raw));
        assert!(s.degree_histogram.is_empty());
        assert_eq!(s.edge_density, 0.0);
    }

    #[test]
    fn stats_star() {
        let g = graph_with(
            &[
                ("hub", NodeClass::Tank),
                ("l1", NodeClass::Valve),
                ("l2", NodeClass::Valve),
                ("l3", NodeClass::Valve),
                ("l4", NodeClass::Valve),
            ],
            &[("hub", "l1"), ("hub", "l2"), ("hub", "l3"), ("hub", "l4")],
        );
        let s = compute_stats(&g);
        assert_eq!(s.degree_histogram, BTreeMap::from([(1, 4), (4, 1)]));
        assert!((s.edge_density - 0.8).abs() < 1e-12);
    }

    #[test]
    fn validate_clean_graph() {
        let g = graph_with(
            &[("a", NodeClass::Valve), ("b", NodeClass::Pump)],
            &[("a", "b")],
        );
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn validate_missing_endpoint() {
        let mut g = graph_with(&[("a", NodeClass::Valve)], &[]);
        g.edges.push(Edge::new("a", "n99", EdgeClass::Solid));
        let v = validate(&g);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::MissingEndpoint { missing, .. } if missing == "n99"));
    }

    #[test]
    fn validate_stage_restriction() {
        let g = graph_with(
            &[("a", NodeClass::Valve), ("c", NodeClass::Connector)],
            &[],
        );
        let v = validate(&g);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::StageClass { node, .. } if node == "c"));
    }

    #[test]
    fn validate_duplicate_edge_unordered() {
        let mut g = graph_with(
            &[("a", NodeClass::Valve), ("b", NodeClass::Pump)],
            &[("a", "b")],
        );
        g.edges.push(Edge::new("b", "a", EdgeClass::NonSolid));
        let v = validate(&g);
        assert!(v.iter().any(|x| matches!(x, Violation::DuplicateEdge { .. })));
    }

    #[test]
    fn class_labels_round_trip() {
        for cls in PHYSICAL_CLASSES {
            assert_eq!(cls.as_str().parse::<NodeClass>().unwrap(), cls);
        }
        assert_eq!("connector".parse::<NodeClass>().unwrap(), NodeClass::Connector);
        assert!("pipe".parse::<NodeClass>().is_err());
        for cls in EDGE_CLASSES {
            assert_eq!(cls.as_str().parse::<EdgeClass>().unwrap(), cls);
        }
    }

    #[test]
    fn half_open_membership() {
        let b = BBox::new(0.0, 0.0, 10.0, 10.0);
        assert!(b.contains_point(0.0, 0.0));
        assert!(!b.contains_point(10.0, 5.0));
        assert!(!b.contains_point(5.0, 10.0));
    }
}
