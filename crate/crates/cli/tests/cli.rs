use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn sitopo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sitopo")).args(args).output().unwrap()
}

fn core_fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = sitopo(&[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn version_names_the_erosion_rule() {
    let out = sitopo(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(&format!("sitopo {}", env!("CARGO_PKG_VERSION"))));
    assert!(text.contains("erosion: strict"));
    let literal = String::from_utf8(sitopo(&["--erosion", "paper-literal", "--version"]).stdout).unwrap();
    assert!(literal.contains("erosion: paper-literal"));
}

#[test]
fn skeletonize_reproduces_the_golden_skeleton() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.pgm");
    let status = sitopo(&["skeletonize", "--in", s(&core_fixture("bar_9x7.pgm")), "--out", s(&out)]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    assert_eq!(fs::read(&out).unwrap(), fs::read(core_fixture("bar_9x7_skeleton.pgm")).unwrap());
}

#[test]
fn topology_loss_of_a_mask_with_itself_is_zero() {
    let t = core_fixture("bar_9x7_skeleton.pgm");
    let out = sitopo(&["loss", "--kind", "topo", "--a", s(&t), "--b", s(&t)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["raw"], 0.0);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gen.json");
    fs::write(&cfg, r#"{"n": 2, "sede": 4}"#).unwrap();
    let out = sitopo(&["gen", "--out", s(&dir.path().join("d")), "--config", s(&cfg)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sede"));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitopo(&["gen", "--out", s(dir.path()), "--shift", "blur:3"]);
    assert_eq!(out.status.code(), Some(1));
    let out = sitopo(&["--jobs", "0", "gen", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_input_is_a_data_error() {
    let out = sitopo(&["skeletonize", "--in", "/nonexistent/m.pgm", "--out", "/tmp/never.pgm"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn render_then_distmap_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mask = dir.path().join("m.pgm");
    let out = sitopo(&[
        "render",
        "--params",
        s(&core_fixture("canonical_params.json")),
        "--out",
        s(&mask),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(&mask).unwrap(), fs::read(core_fixture("canonical_128.pgm")).unwrap());
    let dist = dir.path().join("d.pgm");
    let out = sitopo(&["distmap", "--in", s(&mask), "--out", s(&dist)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let side: serde_json::Value = serde_json::from_slice(&fs::read(dist.with_extension("json")).unwrap()).unwrap();
    assert_eq!(side["direction"], "in");
    assert!(side["max"].as_u64().unwrap() >= 6);
}

#[test]
fn gen_matches_the_frozen_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let out = sitopo(&["gen", "--out", s(dir.path()), "--n", "3", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for entry in fs::read_dir(core_fixture("dataset_n3")).unwrap() {
        let entry = entry.unwrap();
        assert_eq!(
            fs::read(entry.path()).unwrap(),
            fs::read(dir.path().join(entry.file_name())).unwrap(),
            "{:?}",
            entry.file_name()
        );
    }
}
