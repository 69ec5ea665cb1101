//! End-to-end runs of the `anderson` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn scratch(tag: &str) -> PathBuf {
    let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).unwrap().as_nanos();
    let dir = std::env::temp_dir().join(format!("anderson-cli-{tag}-{}-{nanos}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(out: &Path, args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_anderson")).args(args).arg("--out").arg(out).output().unwrap();
    let text = String::from_utf8_lossy(&o.stdout).into_owned() + &String::from_utf8_lossy(&o.stderr);
    (o.status.code().unwrap(), text)
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    dirs.sort();
    dirs
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn classify_writes_manifest_and_output() {
    let out = scratch("classify");
    let (code, text) = run(&out, &["classify", "--trees", "2,2"]);
    assert_eq!(code, 0, "{text}");
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 1);
    let m = manifest(&dirs[0]);
    assert_eq!(m["schema"], "v1");
    assert_eq!(m["command"], "classify");
    assert_eq!(m["exit_code"], 0);
    assert!(m["frozen_constants"]["version"].is_string());
    let body: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dirs[0].join("classify.json")).unwrap()).unwrap();
    let classes: Vec<&str> = body["diagrams"].as_array().unwrap().iter().map(|d| d["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["Negative", "ZeroDegree", "ZeroDegree"]);
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn runs_never_reuse_directories() {
    let out = scratch("append");
    for _ in 0..3 {
        assert_eq!(run(&out, &["sigma-table", "--nmax", "2"]).0, 0);
    }
    let dirs = run_dirs(&out);
    assert_eq!(dirs.len(), 3);
    for d in &dirs {
        assert!(d.join("sigma_table.csv").exists());
        assert!(d.join("manifest.json").exists());
    }
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn configuration_errors_exit_two() {
    let out = scratch("errors");
    assert_eq!(run(&out, &["evaluate", "--diagram", "bubble4", "--eps", "0.01"]).0, 2);
    assert_eq!(run(&out, &["evaluate", "--diagram", "bubble4", "--eps", "2^-3", "--bogus"]).0, 2);
    assert_eq!(run(&out, &["evaluate", "--diagram", "nope", "--eps", "2^-3"]).0, 2);
    assert_eq!(run(&out, &["sigma-table", "--nmax", "9"]).0, 2);
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn identities_suite_passes() {
    let out = scratch("identities");
    let (code, text) = run(&out, &["verify", "identities", "--nmax", "3"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!text.contains("FAIL"));
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn failing_checks_exit_one() {
    // sector coverage does not hold for generic four-point configurations
    let out = scratch("sectors");
    let (code, text) = run(&out, &["verify", "sectors"]);
    assert_eq!(code, 1, "{text}");
    let dirs = run_dirs(&out);
    assert_eq!(manifest(&dirs[0])["exit_code"], 1);
    std::fs::remove_dir_all(out).ok();
}

#[test]
fn renormalise_emits_formal_sum() {
    let out = scratch("renormalise");
    let (code, text) = run(&out, &["renormalise", "--diagram", "sunset2"]);
    assert_eq!(code, 0, "{text}");
    let dirs = run_dirs(&out);
    let files: Vec<String> =
        std::fs::read_dir(&dirs[0]).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert!(files.iter().any(|f| f.ends_with(".json") && f != "manifest.json"), "{files:?}");
    std::fs::remove_dir_all(out).ok();
}
