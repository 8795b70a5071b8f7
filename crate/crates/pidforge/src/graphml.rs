//! GraphML serialization of process graphs.
//!
//! Dialect: undirected graphs; node data keys `cls`, `x1`, `y1`, `x2`, `y2`,
//! `conf`; edge data keys `cls`, `conf`; graph data keys `stage`, `width`,
//! `height`. `conf` defaults to 1.0 and `stage` to `raw` when absent. Key
//! ids are resolved through the `<key>` declarations, so files written by
//! other tools parse as long as the `attr.name`s match.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use quick_xml::events::{BytesDecl, BytesEnd, BytesStart, BytesText, Event};
use quick_xml::{Reader, Writer};
use thiserror::Error;

use crate::model::{
    validate, BBox, Edge, EdgeClass, Node, NodeClass, ProcessGraph, Stage, Violation,
};

#[derive(Debug, Error)]
pub enum GraphmlError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed XML at line {line}: {message}")]
    Xml { line: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("vocabulary error: {0}")]
    Vocabulary(String),
    #[error("refusing to write invalid graph: {}", summarize(.0))]
    Invalid(Vec<Violation>),
}

fn summarize(violations: &[Violation]) -> String {
    let mut parts: Vec<String> = violations.iter().take(3).map(|v| v.to_string()).collect();
    if violations.len() > 3 {
        parts.push(format!("... {} more", violations.len() - 3));
    }
    parts.join("; ")
}

fn line_of(text: &str, byte_pos: u64) -> usize {
    let end = (byte_pos as usize).min(text.len());
    text[..end].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn read_graphml(path: &Path) -> Result<ProcessGraph, GraphmlError> {
    let xml = std::fs::read_to_string(path).map_err(|source| GraphmlError::Io {
        path: path.to_owned(),
        source,
    })?;
    read_graphml_str(&xml)
}

pub fn write_graphml(g: &ProcessGraph, path: &Path) -> Result<(), GraphmlError> {
    let xml = graphml_string(g)?;
    std::fs::write(path, xml).map_err(|source| GraphmlError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Default)]
struct ElemData {
    values: BTreeMap<String, String>,
}

impl ElemData {
    fn required(&self, name: &str, ctx: &str) -> Result<&str, GraphmlError> {
        self.values
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| GraphmlError::Schema(format!("{ctx}: missing attribute {name}")))
    }

    fn number(&self, name: &str, ctx: &str) -> Result<f64, GraphmlError> {
        let raw = self.required(name, ctx)?;
        raw.trim().parse::<f64>().map_err(|_| {
            GraphmlError::Schema(format!("{ctx}: attribute {name}: invalid number {raw:?}"))
        })
    }

    fn conf(&self, ctx: &str) -> Result<f64, GraphmlError> {
        match self.values.get("conf") {
            None => Ok(1.0),
            Some(raw) => raw.trim().parse::<f64>().map_err(|_| {
                GraphmlError::Schema(format!("{ctx}: attribute conf: invalid number {raw:?}"))
            }),
        }
    }
}

fn get_attr(e: &BytesStart, name: &str) -> Result<Option<String>, GraphmlError> {
    match e.try_get_attribute(name) {
        Ok(Some(a)) => match a.normalized_value(quick_xml::XmlVersion::Implicit1_0) {
            Ok(v) => Ok(Some(v.into_owned())),
            Err(err) => Err(GraphmlError::Schema(format!("attribute {name}: {err}"))),
        },
        Ok(None) => Ok(None),
        Err(err) => Err(GraphmlError::Schema(format!("attribute {name}: {err}"))),
    }
}

fn need_attr(e: &BytesStart, name: &str, ctx: &str) -> Result<String, GraphmlError> {
    get_attr(e, name)?
        .ok_or_else(|| GraphmlError::Schema(format!("{ctx}: missing attribute {name}")))
}

pub fn read_graphml_str(xml: &str) -> Result<ProcessGraph, GraphmlError> {
    let mut reader = Reader::from_str(xml);
    reader.config_mut().trim_text(true);

    let mut key_names: BTreeMap<String, String> = BTreeMap::new();
    let mut graph_data = ElemData::default();
    let mut raw_nodes: Vec<(String, ElemData)> = Vec::new();
    let mut raw_edges: Vec<(String, String, ElemData)> = Vec::new();
    let mut saw_graph = false;

    macro_rules! xml_try {
        ($expr:expr) => {
            $expr.map_err(|e| GraphmlError::Xml {
                line: line_of(xml, reader.error_position()),
                message: e.to_string(),
            })?
        };
    }

    loop {
        let ev = xml_try!(reader.read_event());
        match ev {
            Event::Start(e) => match e.local_name().as_ref() {
                "key" => {
                    record_key(&e, &mut key_names)?;
                    xml_try!(reader.read_to_end(e.name()));
                }
                "graph" => saw_graph = true,
                "data" => {
                    let key = need_attr(&e, "key", "graph data")?;
                    let text = xml_try!(reader.read_text(e.name()));
                    let name = key_names.get(&key).cloned().unwrap_or(key);
                    graph_data.values.insert(name, text.trim().to_owned());
                }
                "node" => {
                    let id = need_attr(&e, "id", "node")?;
                    let data = read_data_block(&mut reader, xml, "node", &key_names)?;
                    raw_nodes.push((id, data));
                }
                "edge" => {
                    let s = need_attr(&e, "source", "edge")?;
                    let t = need_attr(&e, "target", "edge")?;
                    let data = read_data_block(&mut reader, xml, "edge", &key_names)?;
                    raw_edges.push((s, t, data));
                }
                _ => {}
            },
            Event::Empty(e) => match e.local_name().as_ref() {
                "key" => record_key(&e, &mut key_names)?,
                "graph" => saw_graph = true,
                "node" => {
                    let id = need_attr(&e, "id", "node")?;
                    raw_nodes.push((id, ElemData::default()));
                }
                "edge" => {
                    let s = need_attr(&e, "source", "edge")?;
                    let t = need_attr(&e, "target", "edge")?;
                    raw_edges.push((s, t, ElemData::default()));
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    if !saw_graph {
        return Err(GraphmlError::Schema("no <graph> element".into()));
    }
    build_graph(graph_data, raw_nodes, raw_edges)
}

fn record_key(
    e: &BytesStart,
    key_names: &mut BTreeMap<String, String>,
) -> Result<(), GraphmlError> {
    if let (Some(id), Some(name)) = (get_attr(e, "id")?, get_attr(e, "attr.name")?) {
        key_names.insert(id, name);
    }
    Ok(())
}

fn read_data_block(
    reader: &mut Reader<&[u8]>,
    xml: &str,
    container: &str,
    key_names: &BTreeMap<String, String>,
) -> Result<ElemData, GraphmlError> {
    let mut data = ElemData::default();
    loop {
        let ev = reader.read_event().map_err(|e| GraphmlError::Xml {
            line: line_of(xml, reader.error_position()),
            message: e.to_string(),
        })?;
        match ev {
            Event::Start(e) if e.local_name().as_ref() == "data" => {
                let key = need_attr(&e, "key", "data")?;
                let text = reader.read_text(e.name()).map_err(|e| GraphmlError::Xml {
                    line: line_of(xml, reader.error_position()),
                    message: e.to_string(),
                })?;
                let name = key_names.get(&key).cloned().unwrap_or(key);
                data.values.insert(name, text.trim().to_owned());
            }
            Event::Start(e) => {
                // nested extension content (ports etc.) — skip
                reader
                    .read_to_end(e.name())
                    .map_err(|e| GraphmlError::Xml {
                        line: line_of(xml, reader.error_position()),
                        message: e.to_string(),
                    })?;
            }
            Event::End(e) if e.local_name().as_ref() == container => break,
            Event::Eof => {
                return Err(GraphmlError::Schema(format!(
                    "unexpected end of file inside <{container}>"
                )))
            }
            _ => {}
        }
    }
    Ok(data)
}

fn build_graph(
    graph_data: ElemData,
    raw_nodes: Vec<(String, ElemData)>,
    raw_edges: Vec<(String, String, ElemData)>,
) -> Result<ProcessGraph, GraphmlError> {
    let stage = match graph_data.values.get("stage") {
        None => Stage::Raw,
        Some(s) => Stage::from_str(s)
            .map_err(|_| GraphmlError::Vocabulary(format!("unknown stage {s:?}")))?,
    };

    let mut g = ProcessGraph::new((0, 0), stage);
    for (id, data) in raw_nodes {
        let ctx = format!("node {id}");
        let cls_raw = data.required("cls", &ctx)?;
        let cls = NodeClass::from_str(cls_raw).map_err(|_| {
            GraphmlError::Vocabulary(format!("{ctx}: unknown node class {cls_raw:?}"))
        })?;
        let bbox = BBox::new(
            data.number("x1", &ctx)?,
            data.number("y1", &ctx)?,
            data.number("x2", &ctx)?,
            data.number("y2", &ctx)?,
        );
        let conf = data.conf(&ctx)?;
        g.nodes.push(Node {
            id,
            cls,
            bbox,
            conf,
            template: None,
        });
    }
    for (s, t, data) in raw_edges {
        let ctx = format!("edge ({s},{t})");
        let cls_raw = data.required("cls", &ctx)?;
        let cls = EdgeClass::from_str(cls_raw).map_err(|_| {
            GraphmlError::Vocabulary(format!("{ctx}: unknown edge class {cls_raw:?}"))
        })?;
        let conf = data.conf(&ctx)?;
        g.edges.push(Edge {
            a: s,
            b: t,
            cls,
            conf,
        });
    }

    let width = graph_data.values.get("width");
    let height = graph_data.values.get("height");
    g.canvas = match (width, height) {
        (Some(w), Some(h)) => {
            let parse = |raw: &String, name| {
                raw.trim().parse::<u32>().map_err(|_| {
                    GraphmlError::Schema(format!("graph: attribute {name}: invalid size {raw:?}"))
                })
            };
            (parse(w, "width")?, parse(h, "height")?)
        }
        _ => derive_canvas(&g),
    };
    Ok(g)
}

fn derive_canvas(g: &ProcessGraph) -> (u32, u32) {
    let mut w = 0.0f64;
    let mut h = 0.0f64;
    for n in &g.nodes {
        w = w.max(n.bbox.x2);
        h = h.max(n.bbox.y2);
    }
    (w.ceil() as u32, h.ceil() as u32)
}

const KEY_DECLS: [(&str, &str, &str); 9] = [
    ("cls", "all", "string"),
    ("conf", "all", "double"),
    ("x1", "node", "double"),
    ("y1", "node", "double"),
    ("x2", "node", "double"),
    ("y2", "node", "double"),
    ("stage", "graph", "string"),
    ("width", "graph", "long"),
    ("height", "graph", "long"),
];

/// Serializes a validated graph. Serialization is deterministic: the same
/// graph value always yields identical bytes.
pub fn graphml_string(g: &ProcessGraph) -> Result<String, GraphmlError> {
    let violations = validate(g);
    if !violations.is_empty() {
        return Err(GraphmlError::Invalid(violations));
    }

    let mut w = Writer::new_with_indent(Vec::new(), b' ', 2);
    let put = |w: &mut Writer<Vec<u8>>, ev: Event| {
        w.write_event(ev).expect("in-memory write cannot fail")
    };

    put(&mut w, Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)));
    let mut root = BytesStart::new("graphml");
    root.push_attribute(("xmlns", "http://graphml.graphdrawing.org/xmlns"));
    put(&mut w, Event::Start(root));

    for (id, domain, ty) in KEY_DECLS {
        let mut k = BytesStart::new("key");
        k.push_attribute(("id", id));
        k.push_attribute(("for", domain));
        k.push_attribute(("attr.name", id));
        k.push_attribute(("attr.type", ty));
        put(&mut w, Event::Empty(k));
    }

    let mut graph = BytesStart::new("graph");
    graph.push_attribute(("edgedefault", "undirected"));
    put(&mut w, Event::Start(graph));
    write_data(&mut w, "stage", g.stage.as_str());
    write_data(&mut w, "width", &g.canvas.0.to_string());
    write_data(&mut w, "height", &g.canvas.1.to_string());

    for n in &g.nodes {
        let mut el = BytesStart::new("node");
        el.push_attribute(("id", n.id.as_str()));
        put(&mut w, Event::Start(el));
        write_data(&mut w, "cls", n.cls.as_str());
        write_data(&mut w, "x1", &n.bbox.x1.to_string());
        write_data(&mut w, "y1", &n.bbox.y1.to_string());
        write_data(&mut w, "x2", &n.bbox.x2.to_string());
        write_data(&mut w, "y2", &n.bbox.y2.to_string());
        write_data(&mut w, "conf", &n.conf.to_string());
        put(&mut w, Event::End(BytesEnd::new("node")));
    }
    for e in &g.edges {
        let mut el = BytesStart::new("edge");
        el.push_attribute(("source", e.a.as_str()));
        el.push_attribute(("target", e.b.as_str()));
        put(&mut w, Event::Start(el));
        write_data(&mut w, "cls", e.cls.as_str());
        write_data(&mut w, "conf", &e.conf.to_string());
        put(&mut w, Event::End(BytesEnd::new("edge")));
    }

    put(&mut w, Event::End(BytesEnd::new("graph")));
    put(&mut w, Event::End(BytesEnd::new("graphml")));
    let bytes = w.into_inner();
    Ok(String::from_utf8(bytes).expect("writer emits UTF-8"))
}

fn write_data(w: &mut Writer<Vec<u8>>, key: &str, value: &str) {
    let mut el = BytesStart::new("data");
    el.push_attribute(("key", key));
    w.write_event(Event::Start(el)).expect("in-memory write");
    w.write_event(Event::Text(BytesText::new(value)))
        .expect("in-memory write");
    w.write_event(Event::End(BytesEnd::new("data")))
        .expect("in-memory write");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Stage;

    fn sample() -> ProcessGraph {
        let mut g = ProcessGraph::new((1000, 800), Stage::Raw);
        g.nodes.push(Node::new(
            "v0",
            NodeClass::Valve,
            BBox::new(100.0, 100.0, 140.0, 140.0),
        ));
        g.nodes.push(Node::new(
            "c1",
            NodeClass::Connector,
            BBox::new(300.0, 118.0, 308.0, 126.0),
        ));
        let mut tank = Node::new("t2", NodeClass::Tank, BBox::new(500.0, 90.0, 580.0, 170.0));
        tank.conf = 0.734;
        g.nodes.push(tank);
        g.edges.push(Edge::new("v0", "c1", EdgeClass::Solid));
        let mut e = Edge::new("c1", "t2", EdgeClass::NonSolid);
        e.conf = 0.25;
        g.edges.push(e);
        g
    }

    #[test]
    fn round_trip_identity() {
        let g = sample();
        let xml = graphml_string(&g).unwrap();
        let back = read_graphml_str(&xml).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn round_trip_preserves_confidence_digits() {
        let g = sample();
        let back = read_graphml_str(&graphml_string(&g).unwrap()).unwrap();
        assert_eq!(back.nodes[2].conf, 0.734);
        assert_eq!(back.edges[1].conf, 0.25);
    }

    #[test]
    fn serialization_is_deterministic() {
        let g = sample();
        assert_eq!(graphml_string(&g).unwrap(), graphml_string(&g).unwrap());
    }

    #[test]
    fn missing_coordinate_names_node() {
        let xml = r#"<?xml version="1.0"?>
<graphml><graph edgedefault="undirected">
  <node id="n3"><data key="cls">valve</data>
    <data key="x1">1</data><data key="y1">1</data><data key="x2">5</data>
  </node>
</graph></graphml>"#;
        let err = read_graphml_str(xml).unwrap_err();
        match err {
            GraphmlError::Schema(msg) => {
                assert!(msg.contains("n3") && msg.contains("y2"), "{msg}")
            }
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn empty_graph_element() {
        let xml = r#"<graphml><graph edgedefault="undirected"/></graphml>"#;
        let g = read_graphml_str(xml).unwrap();
        assert!(g.nodes.is_empty() && g.edges.is_empty());
        assert_eq!(g.stage, Stage::Raw);
    }

    #[test]
    fn unknown_class_is_vocabulary_error() {
        let xml = r#"<graphml><graph edgedefault="undirected">
  <node id="a"><data key="cls">widget</data><data key="x1">0</data>
  <data key="y1">0</data><data key="x2">4</data><data key="y2">4</data></node>
</graph></graphml>"#;
        assert!(matches!(
            read_graphml_str(xml).unwrap_err(),
            GraphmlError::Vocabulary(_)
        ));
    }

    #[test]
    fn malformed_xml_reports_line() {
        let xml = "<graphml>\n<graph edgedefault=\"undirected\">\n</wrong>\n</graphml>";
        match read_graphml_str(xml).unwrap_err() {
            GraphmlError::Xml { line, .. } => assert_eq!(line, 3),
            other => panic!("wrong error: {other}"),
        }
    }

    #[test]
    fn key_id_indirection() {
        let xml = r#"<graphml>
  <key id="d0" for="node" attr.name="cls" attr.type="string"/>
  <key id="d1" for="node" attr.name="x1" attr.type="double"/>
  <key id="d2" for="node" attr.name="y1" attr.type="double"/>
  <key id="d3" for="node" attr.name="x2" attr.type="double"/>
  <key id="d4" for="node" attr.name="y2" attr.type="double"/>
  <graph edgedefault="undirected">
    <node id="p"><data key="d0">pump</data><data key="d1">10</data>
    <data key="d2">10</data><data key="d3">30</data><data key="d4">30</data></node>
  </graph>
</graphml>"#;
        let g = read_graphml_str(xml).unwrap();
        assert_eq!(g.nodes[0].cls, NodeClass::Pump);
        assert_eq!(g.nodes[0].bbox, BBox::new(10.0, 10.0, 30.0, 30.0));
        assert_eq!(g.nodes[0].conf, 1.0);
    }

    #[test]
    fn invalid_graph_refused_on_write() {
        let mut g = sample();
        g.edges.push(Edge::new("v0", "ghost", EdgeClass::Solid));
        assert!(matches!(
            graphml_string(&g).unwrap_err(),
            GraphmlError::Invalid(_)
        ));
    }

    #[test]
    fn canvas_derived_when_absent() {
        let xml = r#"<graphml><graph edgedefault="undirected">
  <node id="a"><data key="cls">tank</data><data key="x1">0</data>
  <data key="y1">0</data><data key="x2">420.5</data><data key="y2">99</data></node>
</graph></graphml>"#;
        let g = read_graphml_str(xml).unwrap();
        assert_eq!(g.canvas, (421, 99));
    }
}
