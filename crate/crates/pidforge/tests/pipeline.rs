//! End-to-end scenarios for CLI paths that the per-module tests leave out:
//! crossing bridging, corpus resumption, and directory-mode evaluation.

use std::path::Path;

use pidforge::cli::run;
use pidforge::fixtures::{random_stitched_graph, toy_seed};
use pidforge::graphml::{read_graphml, write_graphml};
use pidforge::manifest::read_manifest;
use pidforge::model::{BBox, Edge, EdgeClass, Node, NodeClass, ProcessGraph, Stage};

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn graphml_count(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "graphml"))
        .count()
}

/// A lone four-way crossing: two lines that touch only optically.
fn crossing_fixture() -> ProcessGraph {
    let mut g = ProcessGraph::new((200, 200), Stage::Raw);
    g.nodes.push(Node::new("v0", NodeClass::Valve, BBox::centered(40.0, 100.0, 20.0)));
    g.nodes.push(Node::new("v1", NodeClass::Pump, BBox::centered(160.0, 100.0, 20.0)));
    g.nodes.push(Node::new("v2", NodeClass::Tank, BBox::centered(100.0, 40.0, 20.0)));
    g.nodes.push(Node::new("v3", NodeClass::Arrow, BBox::centered(100.0, 160.0, 20.0)));
    g.nodes.push(Node::new("x0", NodeClass::Crossing, BBox::centered(100.0, 100.0, 10.0)));
    for v in ["v0", "v1", "v2", "v3"] {
        g.edges.push(Edge::new("x0", v, EdgeClass::Solid));
    }
    g
}

#[test]
fn bridge_flag_reconnects_crossing_arms() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("raw.graphml");
    write_graphml(&crossing_fixture(), &input).unwrap();

    let deleted = dir.path().join("deleted.graphml");
    let code = run(["pidforge", "collapse", arg(&input), arg(&deleted)]);
    assert_eq!(code, 0);
    let g = read_graphml(&deleted).unwrap();
    assert_eq!(g.nodes.len(), 4);
    assert!(g.edges.is_empty(), "default mode must sever both lines");

    let bridged = dir.path().join("bridged.graphml");
    let code = run(["pidforge", "collapse", arg(&input), arg(&bridged), "--bridge-crossings"]);
    assert_eq!(code, 0);
    let g = read_graphml(&bridged).unwrap();
    assert_eq!(g.nodes.len(), 4);
    let mut keys: Vec<(String, String)> = g
        .edges
        .iter()
        .map(|e| {
            let (a, b) = (e.a.clone(), e.b.clone());
            if a <= b { (a, b) } else { (b, a) }
        })
        .collect();
    keys.sort();
    let want = vec![
        ("v0".to_string(), "v1".to_string()),
        ("v2".to_string(), "v3".to_string()),
    ];
    assert_eq!(keys, want, "bridging must pair geometrically opposite arms");
}

#[test]
fn generate_resume_extends_an_existing_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let seed_path = dir.path().join("seed.graphml");
    let (_, seed) = toy_seed(0);
    write_graphml(&seed, &seed_path).unwrap();
    let out = dir.path().join("corpus");

    let base = [
        "pidforge",
        "generate",
        "--seeds",
        arg(&seed_path),
        "--out",
        arg(&out),
        "--target",
        "2",
        "--seed",
        "7",
    ];
    assert_eq!(run(base), 0);
    assert_eq!(graphml_count(&out), 2);
    let manifest_path = out.join("manifest.jsonl");
    let before = std::fs::read(&manifest_path).unwrap();

    // a second plain run must refuse to touch the directory
    assert_eq!(run(base), 2);
    assert_eq!(std::fs::read(&manifest_path).unwrap(), before);

    let mut resumed = base.to_vec();
    resumed.push("--resume");
    assert_eq!(run(resumed), 0);
    assert_eq!(graphml_count(&out), 4);

    let entries = read_manifest(&manifest_path).unwrap();
    assert_eq!(entries.len(), 4);
    for pair in entries.windows(2) {
        assert!(pair[0].attempt < pair[1].attempt);
    }
    let ids: std::collections::BTreeSet<&str> =
        entries.iter().map(|e| e.plan_id.as_str()).collect();
    assert_eq!(ids.len(), 4, "resumed plans must not reuse ids");

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["accepted"], 2, "report covers the resumed run only");
}

#[test]
fn eval_directory_mode_pairs_files_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let gt_dir = dir.path().join("gt");
    let pred_dir = dir.path().join("pred");
    std::fs::create_dir_all(&gt_dir).unwrap();
    std::fs::create_dir_all(&pred_dir).unwrap();
    for i in 0..3u64 {
        let g = random_stitched_graph(i);
        write_graphml(&g, &gt_dir.join(format!("plan_{i}.graphml"))).unwrap();
        write_graphml(&g, &pred_dir.join(format!("plan_{i}.graphml"))).unwrap();
    }

    let report_path = dir.path().join("report.json");
    let code = run([
        "pidforge",
        "eval",
        "--pred",
        arg(&pred_dir),
        "--gt",
        arg(&gt_dir),
        "--report",
        arg(&report_path),
    ]);
    assert_eq!(code, 0);

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let plans = doc["plans"].as_object().unwrap();
    assert_eq!(plans.len(), 3);
    assert!(plans.contains_key("plan_0"));
    assert_eq!(doc["mean_node_map"], 1.0);
    assert_eq!(doc["mean_edge_map"], 1.0);
    assert_eq!(doc["schema_version"], 1);

    // a ground-truth plan without a same-named prediction is a data error
    std::fs::remove_file(pred_dir.join("plan_1.graphml")).unwrap();
    let code = run([
        "pidforge",
        "eval",
        "--pred",
        arg(&pred_dir),
        "--gt",
        arg(&gt_dir),
    ]);
    assert_eq!(code, 2);
}
