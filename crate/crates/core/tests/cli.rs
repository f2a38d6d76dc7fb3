use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coia")).args(args).output().expect("coia runs")
}

fn synth_fixture(dir: &Path) -> String {
    let out = coia(&["synth", "--out", dir.to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap().trim().to_string()
}

#[test]
fn synth_then_report_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_fixture(dir.path());
    for name in ["posts.jsonl", "truth.csv", "synth_spec.json", "embeddings.jsonl", "config.json"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let out = coia(&["report", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("results");
    for name in [
        "report.json",
        "manifest.json",
        "matrix.csv",
        "edges_intra.csv",
        "edges_cross.csv",
        "grid_intra.csv",
        "detect_intra.json",
        "edges_merged.csv",
        "tsn.json",
        "analysis.json",
    ] {
        assert!(results.join(name).is_file(), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(results.join("report.json")).unwrap()).unwrap();
    assert!(report.get("detect").is_some());
    let grid = fs::read_to_string(results.join("grid_intra.csv")).unwrap();
    assert!(grid.starts_with("edge_q,node_q,min_density,n_nodes,n_edges,n_components\n"));
    assert_eq!(grid.lines().count(), 1 + 21 * 21);
}

#[test]
fn stage_commands_and_out_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_fixture(dir.path());
    let alt = dir.path().join("alt");
    let out = coia(&["courl", "--config", &config, "--out", alt.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let listed = String::from_utf8(out.stdout).unwrap();
    assert!(listed.lines().any(|l| l.ends_with("edges_intra.csv")));
    assert!(alt.join("courl.json").is_file());
    assert!(!dir.path().join("results").exists());

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(alt.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "courl");
    assert_eq!(manifest["inputs"][0]["path"], "posts.jsonl");
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, r#"{"posts": ["missing.jsonl"], "no_such_field": 1}"#).unwrap();
    let out = coia(&["ingest", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("coia: "));

    fs::write(&path, r#"{"posts": ["missing.jsonl"]}"#).unwrap();
    let out = coia(&["ingest", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("out_dir"));

    let out_dir = dir.path().join("out");
    let out = coia(&["ingest", "--config", path.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.jsonl"));
}

#[test]
fn tsn_without_embeddings_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = synth_fixture(dir.path());
    let mut cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(&config).unwrap()).unwrap();
    cfg["embeddings"] = serde_json::Value::Null;
    fs::write(&config, cfg.to_string()).unwrap();
    let out = coia(&["tsn", "--config", &config]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("embeddings"));
}
