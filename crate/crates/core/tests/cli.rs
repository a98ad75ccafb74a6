use std::path::Path;
use std::process::{Command, Output};

fn irs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irs"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    irs(args).status.code().unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["norm", "--word", "abABabaBAA"]), 0);
    assert_eq!(code(&["norm", "--construction", "bogus"]), 1);
    assert_eq!(
        code(&["fixing", "--construction", "glued { n = 2 }", "--k", "5"]),
        1
    );
    assert_eq!(
        code(&["fixing", "--construction", "quotient", "--walks", "10"]),
        2
    );
    assert_eq!(
        code(&["rw-entropy", "--construction", "free", "--t-max", "30"]),
        3
    );
}

#[test]
fn norm_to_stdout() {
    let out = irs(&["norm", "--word", "abABabaBAA", "--word", "ab"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("word,norm,detail"));
    assert!(lines.next().unwrap().starts_with("abABabaBAA,44,"));
    assert!(lines.next().unwrap().starts_with("ab,infinite,"));
}

#[test]
fn config_file_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "seed = 4\nt = 2\np_grid = [0.0, 0.5, 1.0]\nmode = \"exact\"\n\n[construction.lamplighter]\nlamp = \"z2\"\nbase = \"z1\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_irs"))
        .args(["entropy-curve", "--config"])
        .arg(&cfg)
        .arg("--out-dir")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(out.join("entropy-curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "p,t,estimate_nats,stderr,mode,theta_samples,seed");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r.contains(",exact,")));
    assert!(Path::new(&out.join("entropy-curve-diff.csv")).exists());
    let meta: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("entropy-curve.meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["command"], "entropy-curve");
    assert_eq!(meta["config"]["seed"], 4);
}

#[test]
fn graph_audit_reports_depth() {
    let out = irs(&[
        "graph-audit",
        "--construction",
        "glued { n = 3 }",
        "--samples",
        "200",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("tree_like,3,pass"));
    assert!(text.contains("tree_like,4,fail"));
    assert!(text.contains("schreier_bijectivity,200,pass"));
}

#[test]
fn walk_and_rw_entropy() {
    let out = irs(&[
        "walk",
        "--construction",
        "lamplighter",
        "--t",
        "4",
        "--seed",
        "3",
    ]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 6);
    let out = irs(&["rw-entropy", "--construction", "quotient", "--t-max", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("t,H,H_over_t,H_diff\n1,1.386294"));
}
