use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn verify(dir: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_soundabs"))
        .arg("verify")
        .arg("--domain")
        .arg(dir.join("domain.sexp"))
        .arg("--qnp")
        .arg(dir.join("qnp.sexp"))
        .arg("--map")
        .arg(dir.join("map.sexp"))
        .arg("--constraints")
        .arg(dir.join("constraints.sexp"))
        .args(extra)
        .env_remove("SOUNDABS_SOLVER")
        .output()
        .unwrap()
}

fn copy_corpus(name: &str, tmp: &Path) {
    for f in ["domain.sexp", "qnp.sexp", "map.sexp", "constraints.sexp"] {
        std::fs::copy(corpus(name).join(f), tmp.join(f)).unwrap();
    }
}

#[test]
fn verify_prints_report_and_exits_zero() {
    let out = verify(&corpus("clear-a"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["aggregate"], "True");
    assert_eq!(report["totals"]["tasks"], 8);
    let tasks = report["tasks"].as_array().unwrap();
    assert_eq!(tasks.len(), 8);
    for t in tasks {
        for key in ["id", "kind", "provenance", "classification", "verdict"] {
            assert!(t.get(key).is_some(), "task lacks {key}: {t}");
        }
        assert_eq!(t["classification"], "Valid");
        assert_eq!(t["verdict"]["status"], "unsat");
    }
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("Domain") && summary.contains("True"), "{summary}");
}

#[test]
fn missing_feature_mapping_is_an_input_error() {
    let tmp = tempfile::tempdir().unwrap();
    copy_corpus("clear-a", tmp.path());
    let map = std::fs::read_to_string(tmp.path().join("map.sexp")).unwrap();
    let map = map.replace("(:fluent H (exists (x) (holding x)))", "");
    std::fs::write(tmp.path().join("map.sexp"), map).unwrap();
    let out = verify(tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains('H'));
}

#[test]
fn refuted_abstraction_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    copy_corpus("clear-a", tmp.path());
    let qnp = std::fs::read_to_string(tmp.path().join("qnp.sexp")).unwrap();
    std::fs::write(tmp.path().join("qnp.sexp"), qnp.replace(":eff ((not H))", ":eff (H)")).unwrap();
    let report = tmp.path().join("report.json");
    let out = verify(tmp.path(), &["--timeout-secs", "5", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let refuted: Vec<_> = report["tasks"].as_array().unwrap().iter().filter(|t| t["classification"] == "Refuted").collect();
    assert!(!refuted.is_empty());
    assert!(refuted.iter().all(|t| t["counterexample"].is_string()));
}

#[test]
fn emitted_scripts_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = verify(&corpus("gripper"), &["--emit-smt", d.path().to_str().unwrap(), "--emit-tasks", d.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 44);
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert_eq!(x, y, "{n:?} differs between runs");
    }
    let script = std::fs::read_to_string(a.path().join("task1_init.smt2")).unwrap();
    assert!(script.contains("(check-sat)"));
}

#[test]
fn timeout_marks_tasks_unknown() {
    let out = verify(&corpus("on-ab"), &["--timeout-secs", "0.01", "--jobs", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8_lossy(&out.stderr);
    assert!(summary.contains("Unknown") && summary.contains("Timeout"), "{summary}");
}

#[test]
fn missing_solver_is_unknown_not_error() {
    let out = verify(&corpus("clear-a"), &["--solver-cmd", "/nonexistent/z3 -in"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_subcommand_checks_reachable_states() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = tmp.path().join("inst.sexp");
    std::fs::write(&inst, "(instance (:objects A B) (:init (on B A) (ontable A) (clear B)))").unwrap();
    let run = |formula: &str| {
        Command::new(env!("CARGO_BIN_EXE_soundabs"))
            .args(["oracle", "--domain"])
            .arg(corpus("clear-a").join("domain.sexp"))
            .arg("--instance")
            .arg(&inst)
            .args(["--check", formula])
            .output()
            .unwrap()
    };
    let ok = run("(forall (x) (not (on x x)))");
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("valid"));
    let bad = run("(exists (x) (holding x))");
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("violated"));
    assert_eq!(run("(clear").status.code(), Some(3));
}
