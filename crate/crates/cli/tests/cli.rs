use std::path::Path;
use std::process::{Command, Output};

fn bshm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bshm"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn generated_instance_runs_through_every_verb() {
    let dir = tempfile::tempdir().unwrap();
    let gen = bshm(
        dir.path(),
        &[
            "--seed", "4", "--jobs", "6", "--types", "3", "generate", "--out", "i.json",
        ],
    );
    assert!(gen.status.success());
    for verb in ["graph", "oneshot", "offline", "online", "oracle"] {
        let out = bshm(dir.path(), &[verb, "--instance", "i.json"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{verb}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let out = bshm(dir.path(), &["verify", "--instances", "i.json", "--level", "full"]);
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&out);
    assert_eq!(summary["failures"].as_array().map(Vec::len), Some(0));
}

#[test]
fn batch_generation_writes_numbered_files() {
    let dir = tempfile::tempdir().unwrap();
    // Files are named by seed, starting at the global seed.
    let out = bshm(dir.path(), &["generate", "--count", "3", "--out", "batch"]);
    assert!(out.status.success());
    let mut names: Vec<String> = std::fs::read_dir(dir.path().join("batch"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["instance-000001.json", "instance-000002.json", "instance-000003.json"]
    );
    let verify = bshm(dir.path(), &["verify", "--instances", "batch"]);
    assert_eq!(verify.status.code(), Some(0));
}

#[test]
fn oneshot_sizes_report_optimum_and_charges() {
    let dir = tempfile::tempdir().unwrap();
    let out = bshm(dir.path(), &["--types", "2", "oneshot", "--sizes", "1/2,3/4,1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["violations"].as_array().map(Vec::len), Some(0));
    assert!(v["optimum"]["cost"].is_string());
    assert_eq!(v["charges"]["values"].as_array().map(Vec::len), Some(3));
}

#[test]
fn csv_reports_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let out = bshm(dir.path(), &["verify", "--count", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("id,jobs,types,mu,offline_cost,online_cost"));
    assert_eq!(text.lines().count(), 3);

    let out = bshm(dir.path(), &["online", "--series", "s.csv"]);
    assert!(out.status.success());
    let series = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(series.lines().next().unwrap().starts_with("start,end"));

    let out = bshm(dir.path(), &["offline", "--audit", "a.csv"]);
    assert!(out.status.success());
    let audit = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert!(audit.lines().count() > 1);
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 4] = [
        &["offline", "--instance", "missing.json"],
        &["--mu", "1/2", "generate"],
        &["oneshot", "--sizes", "abc"],
        &["--seed", "1", "--jobs", "6", "oracle", "--max-nodes", "2"],
    ];
    for args in cases {
        let out = bshm(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn malformed_instance_file_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"types": [], "jobs": []}"#).unwrap();
    let out = bshm(dir.path(), &["offline", "--instance", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dot_output_lists_edges() {
    let dir = tempfile::tempdir().unwrap();
    let out = bshm(dir.path(), &["graph", "--example", "--dot"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("digraph"));
    assert!(text.contains("t10 -> t11;"));
}
