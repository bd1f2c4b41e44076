//! End-to-end tests of the binary: exit codes, output schemas, pipeline
//! composition and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chaingauss"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write(dir: &TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn collider(dir: &TempDir) -> PathBuf {
    write(dir, "collider.cg", "node 1\nnode 2\nnode 3\nedge 1 -> 2\nedge 3 -> 2\n")
}

fn arg(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = collider(&dir);
    let out = run(&["validate", "--graph", arg(&good)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("ok:"));

    let pseudo = write(
        &dir,
        "pseudo.cg",
        "node 1\nnode 2\nnode 3\nedge 1 -> 2\nedge 2 -- 3\nedge 3 -- 1\n",
    );
    let out = run(&["validate", "--graph", arg(&pseudo)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("directed pseudocycle 1,2,3,1"));

    let malformed = write(&dir, "bad.cg", "node 1\nbanana 2\n");
    let out = run(&["validate", "--graph", arg(&malformed)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn auto_declare_flag_controls_undeclared_nodes() {
    let dir = TempDir::new().unwrap();
    let implied = write(&dir, "implied.cg", "edge 1 -> 2\n");
    let out = run(&["validate", "--graph", arg(&implied)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["validate", "--graph", arg(&implied), "--auto-declare"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn separate_reports_both_verdicts_and_rejects_overlap() {
    let dir = TempDir::new().unwrap();
    let graph = collider(&dir);
    let out = run(&["separate", "--graph", arg(&graph), "1", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "true");
    let out = run(&["separate", "--graph", arg(&graph), "1", "3", "2"]);
    assert_eq!(stdout(&out).trim(), "false");
    let out = run(&["separate", "--graph", arg(&graph), "1", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["separate", "--graph", arg(&graph), "1", "3", "2", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["separated"], serde_json::json!(false));
    assert!(doc["moral_ancestral_graph"]["edges"]
        .as_array()
        .unwrap()
        .contains(&serde_json::json!("1 -- 3")));
}

#[test]
fn separate_accepts_comma_separated_sets() {
    let dir = TempDir::new().unwrap();
    let graph = write(
        &dir,
        "wide.cg",
        "node 1\nnode 2\nnode 3\nnode 4\nedge 1 -> 3\nedge 2 -> 3\nedge 3 -> 4\n",
    );
    let out = run(&["separate", "--graph", arg(&graph), "1,2", "4", "3"]);
    assert_eq!(stdout(&out).trim(), "true");
    let out = run(&["separate", "--graph", arg(&graph), "1,2", "4"]);
    assert_eq!(stdout(&out).trim(), "false");
}

#[test]
fn build_rejects_foreign_parameter_files() {
    let dir = TempDir::new().unwrap();
    let graph_a = collider(&dir);
    let graph_b = write(&dir, "bigger.cg", "node 1\nnode 2\nnode 3\nnode 4\nedge 1 -> 2\n");
    let params = dir.path().join("params.json");
    run(&["sample", "--graph", arg(&graph_a), "-o", arg(&params)]);
    let out = run(&["build", "--graph", arg(&graph_b), "--params", arg(&params)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dim_prints_the_parameter_count() {
    let dir = TempDir::new().unwrap();
    let mixed = write(&dir, "mixed.cg", "node 1\nnode 2\nnode 3\nedge 1 -> 2\nedge 2 -- 3\n");
    let out = run(&["dim", "--graph", arg(&mixed)]);
    assert_eq!(stdout(&out).trim(), "8");
}

#[test]
fn sample_build_ci_pipeline_matches_graph_verdicts() {
    let dir = TempDir::new().unwrap();
    let graph = collider(&dir);
    let params = dir.path().join("params.json");
    let dist = dir.path().join("dist.json");
    let out = run(&["sample", "--graph", arg(&graph), "--seed", "7", "-o", arg(&params)]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&[
        "build", "--graph", arg(&graph), "--params", arg(&params), "-o", arg(&dist),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["ci", "--dist", arg(&dist), "1", "3", "", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["independent"], serde_json::json!(true));
    let out = run(&["ci", "--dist", arg(&dist), "1", "3", "2", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["independent"], serde_json::json!(false));
    // Record schema of the verdict stream.
    let keys: Vec<&str> = doc.as_object().unwrap().keys().map(String::as_str).collect();
    assert_eq!(keys.len(), 5);
    for key in ["i", "j", "Z", "partial_corr", "independent"] {
        assert!(keys.contains(&key), "missing {key}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let graph = collider(&dir);
    let a = run(&["sample", "--graph", arg(&graph), "--seed", "3"]);
    let b = run(&["sample", "--graph", arg(&graph), "--seed", "3"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["sample", "--graph", arg(&graph), "--seed", "4"]);
    assert_ne!(a.stdout, c.stdout);

    let a = run(&["faithfulness", "--graph", arg(&graph), "--samples", "25", "--json"]);
    let b = run(&["faithfulness", "--graph", arg(&graph), "--samples", "25", "--json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn faithfulness_report_schema_and_exit() {
    let dir = TempDir::new().unwrap();
    let graph = collider(&dir);
    let out = run(&[
        "faithfulness", "--graph", arg(&graph), "--samples", "30", "--seed", "5", "--json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for key in [
        "graph", "d", "n_samples", "seed", "tol", "faithful_fraction",
        "markov_violations", "faithfulness_violations",
    ] {
        assert!(doc.get(key).is_some(), "missing report key {key}");
    }
    assert_eq!(doc["d"], serde_json::json!(8));
    assert_eq!(doc["n_samples"], serde_json::json!(30));
    assert_eq!(doc["graph"]["nodes"], serde_json::json!(3));
}

#[test]
fn equiv_decides_and_names_the_witness() {
    let dir = TempDir::new().unwrap();
    let path_g = write(&dir, "path.cg", "node 1\nnode 2\nnode 3\nedge 1 -- 2\nedge 2 -- 3\n");
    let mixed = write(&dir, "mixed.cg", "node 1\nnode 2\nnode 3\nedge 1 -> 2\nedge 2 -- 3\n");
    let coll = collider(&dir);
    let out = run(&["equiv", arg(&mixed), arg(&path_g)]);
    assert_eq!(stdout(&out).trim(), "equivalent");
    let out = run(&["equiv", arg(&coll), arg(&path_g), "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["equivalent"], serde_json::json!(false));
    assert_eq!(doc["skeleton_equal"], serde_json::json!(true));
    assert!(doc["witness"].as_str().unwrap().contains("complex"));
}

#[test]
fn enumerate_catalogs_classes() {
    let out = run(&["enumerate", "2", "--json"]);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let classes = doc.as_array().unwrap();
    assert_eq!(classes.len(), 2);
    let sizes: Vec<u64> = classes.iter().map(|c| c["size"].as_u64().unwrap()).collect();
    assert_eq!(sizes.iter().sum::<u64>(), 4);
    let out = run(&["enumerate", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sparse_node_labels_survive_the_whole_pipeline() {
    let dir = TempDir::new().unwrap();
    let graph = write(
        &dir,
        "sparse.cg",
        "node 10\nnode 20\nnode 30\nedge 10 -> 20\nedge 30 -> 20\n",
    );
    let out = run(&["separate", "--graph", arg(&graph), "10", "30", "20"]);
    assert_eq!(stdout(&out).trim(), "false");
    let params = dir.path().join("params.json");
    let dist = dir.path().join("dist.json");
    run(&["sample", "--graph", arg(&graph), "-o", arg(&params)]);
    run(&["build", "--graph", arg(&graph), "--params", arg(&params), "-o", arg(&dist)]);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dist).unwrap()).unwrap();
    assert_eq!(doc["labels"], serde_json::json!([10, 20, 30]));
    let out = run(&["ci", "--dist", arg(&dist), "10", "30", "20", "--json"]);
    let verdict: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(verdict["independent"], serde_json::json!(false));
    let out = run(&["faithfulness", "--graph", arg(&graph), "--samples", "10", "--json"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(report["graph"]["edges"]
        .as_array()
        .unwrap()
        .contains(&serde_json::json!("10 -> 20")));
}
