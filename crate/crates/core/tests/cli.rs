use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperfill")).args(args).output().unwrap()
}

fn gen_grid(dir: &Path) -> String {
    let path = dir.join("grid.csv");
    let out = run(&["gen-space", "interval-grid", "--n", "16", "-o", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn build_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let space = gen_grid(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for (dir, threads) in [(&a, "1"), (&b, "2")] {
        let out = run(&["--threads", threads, "build", "--space", &space, "-o", dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for file in ["graph.json", "graph.dot", "stats.json"] {
        let x = std::fs::read(a.join(file)).unwrap();
        let y = std::fs::read(b.join(file)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{file}");
    }
}

#[test]
fn invalid_tau_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let space = gen_grid(tmp.path());
    let out = run(&["build", "--space", &space, "--tau", "2", "-o", tmp.path().join("g").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tau"));
}

#[test]
fn missing_space_file_names_the_path() {
    let out = run(&["build", "--space", "/nonexistent/space.csv", "-o", "/tmp/unused"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/space.csv"));
}

#[test]
fn verify_writes_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let space = gen_grid(tmp.path());
    let dir = tmp.path().join("report");
    let out = run(&[
        "verify",
        "--space",
        &space,
        "--checks",
        "doubling,trace_identity",
        "--seed",
        "5",
        "--output",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("trace_identity"));
}
