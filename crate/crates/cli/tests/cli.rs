use std::path::Path;
use std::process::{Command, Output};

fn indexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indexlab")).args(args).output().unwrap()
}

fn preset_file(dir: &Path, name: &str) -> String {
    let out = indexlab(&["list-presets", "--show", name]);
    assert!(out.status.success());
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, &out.stdout).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn list_presets_names_every_suite() {
    let out = indexlab(&["list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["circle-winding-0", "interval-ramp-w1-aps", "maslov-triple-relation", "eta-lattice"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn run_writes_records_csvs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let file = preset_file(dir.path(), "split-constant");
    let out_dir = dir.path().join("out");
    let out = indexlab(&["run", &file, "--out-dir", out_dir.to_str().unwrap(), "--seed", "7", "--sequential"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(out_dir.join("reports.jsonl")).unwrap();
    let expected = indexlab::scenario::preset("split-constant")
        .unwrap()
        .with_overrides(&indexlab::scenario::Overrides { seed: Some(7), ..Default::default() })
        .unwrap()
        .hash();
    assert!(records.contains(&expected), "override not reflected in the scenario hash");
    assert!(out_dir.join("summary.csv").exists());
    assert!(out_dir.join("split-constant").read_dir().unwrap().count() >= 2);
}

#[test]
fn failing_verdict_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let file = preset_file(dir.path(), "split-constant");
    let text = std::fs::read_to_string(&file).unwrap().replace("expected_flow = 0", "expected_flow = 4");
    std::fs::write(&file, text).unwrap();
    let out_dir = dir.path().join("out");
    let out = indexlab(&["run", &file, "--out-dir", out_dir.to_str().unwrap(), "--format", "records"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_input_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.toml");
    std::fs::write(&file, "schema = \"indexlab.scenario/9\"\n").unwrap();
    assert_eq!(indexlab(&["run", file.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(indexlab(&["verify", "--suite", "nope"]).status.code(), Some(2));
}
