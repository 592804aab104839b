//! End-to-end tests of the `ldk` binary: subcommand behaviour, exit codes
//! and trace replayability.

use std::path::PathBuf;
use std::process::{Command, Output};

fn ldk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ldk"))
}

fn tmp(name: &str, content: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ldk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

#[test]
fn check_prints_the_formula() {
    let file = tmp("id.nd", "\\x:X. x");
    let out = ldk().arg("check").arg(&file).output().unwrap();
    assert!(out.status.success());
    assert_eq!(stdout(&out), "X -> X\n");
}

#[test]
fn check_rejects_ill_typed_with_exit_2() {
    let file = tmp("bad.nd", "x y");
    let ctx = tmp("bad.ctx", "x:X, y:X");
    let out = ldk()
        .arg("check")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_rejects_syntax_errors_with_exit_2() {
    let file = tmp("syn.nd", "\\x:X. )");
    let out = ldk().arg("check").arg(&file).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reduce_projection_one_beta_conj_step() {
    let file = tmp("pr.nd", "p1 <a, b>");
    let ctx = tmp("pr.ctx", "a:X, b:Y");
    let out = ldk()
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("\"rule\":\"beta_conj\""));
    assert!(text.lines().last().unwrap() == "a");
}

#[test]
fn trace_files_replay_to_the_same_endpoint() {
    let dir = std::env::temp_dir().join(format!("ldk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = tmp(
        "case.nd",
        "case in1[X \\/ Bot] x of { a:X => f a | b:Bot => b }",
    );
    let ctx = tmp("case.ctx", "x:X, f:~X");
    let trace = dir.join("case.jsonl");
    let out = ldk()
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(out.status.success());
    let endpoint = stdout(&out).lines().last().unwrap().to_string();
    // the last trace line carries the endpoint byte-identically
    let text = std::fs::read_to_string(&trace).unwrap();
    let last: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(
        last.get("term").and_then(|v| v.as_str()),
        Some(endpoint.as_str())
    );

    // and the simulate subcommand replays it into a valid certificate
    let out = ldk()
        .arg("simulate")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--map")
        .arg("demorgan")
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let cert: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(cert.get("ok"), Some(&serde_json::Value::Bool(true)));
    assert_eq!(cert.get("m"), Some(&serde_json::json!(0)));
}

#[test]
fn translate_both_maps() {
    let file = tmp("tr.nd", "p1 <x, y>");
    let ctx = tmp("tr.ctx", "x:X, y:Bot");
    let out = ldk()
        .arg("translate")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--map")
        .arg("conjfree")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let term = lines.next().unwrap();
    let ty = lines.next().unwrap();
    assert!(term.contains("delta"), "general projection clause: {term}");
    assert_eq!(ty, "X");
    let out = ldk()
        .arg("translate")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--map")
        .arg("demorgan")
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn graph_verdict_and_dot_output() {
    let dir = std::env::temp_dir().join(format!("ldk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let file = tmp("g.nd", "p1 <x, y>");
    let ctx = tmp("g.ctx", "x:X, y:Bot");
    let dot = dir.join("g.dot");
    let out = ldk()
        .arg("graph")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--dot")
        .arg(&dot)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(stdout(&out).contains("verdict: exhausted-acyclic"));
    let dot_text = std::fs::read_to_string(&dot).unwrap();
    assert!(dot_text.starts_with("digraph"));
}

#[test]
fn graph_bound_exceeded_exits_3() {
    let file = tmp("gb.nd", "p1 <x, y>");
    let ctx = tmp("gb.ctx", "x:X, y:Bot");
    let out = ldk()
        .arg("graph")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--bound")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn reduce_fuel_exhaustion_exits_3() {
    let file = tmp("fuel.nd", "p2 <p1 <x, y>, y>");
    let ctx = tmp("fuel.ctx", "x:X, y:Bot");
    let out = ldk()
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .arg("--fuel")
        .arg("0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn enumerate_lists_the_context_at_bound_one() {
    let out = ldk()
        .arg("enumerate")
        .arg("--system")
        .arg("small")
        .arg("--bound")
        .arg("1")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("x : X"));
    assert!(text.contains("y : Bot"));
    assert!(text.contains("f : ~X"));
}

#[test]
fn verify_sn_small_bound_8_exits_0() {
    let out = ldk()
        .arg("verify")
        .arg("--suite")
        .arg("sn-small")
        .arg("--bound")
        .arg("8")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("sn-small: pass"));
}

#[test]
fn verify_failure_exits_1_and_writes_json() {
    let dir = std::env::temp_dir().join(format!("ldk-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let json = dir.join("commutation.json");
    // the commutation suite has known red witnesses at bound 6
    let out = ldk()
        .arg("verify")
        .arg("--suite")
        .arg("lemma-commutation")
        .arg("--bound")
        .arg("6")
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(report.get("casesRun").and_then(|v| v.as_u64()).unwrap() > 0);
    assert!(!report
        .get("failures")
        .unwrap()
        .as_array()
        .unwrap()
        .is_empty());
}

#[test]
fn ldk_seed_changes_fresh_names_deterministically() {
    // a rho1 step introduces fresh names; a nonzero seed adds primes
    let file = tmp("seed.nd", "(delta k:~(X -> Bot). k f) x");
    let ctx = tmp("seed.ctx", "x:X, f:~X");
    let base = ldk()
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .output()
        .unwrap();
    let seeded = ldk()
        .env("LDK_SEED", "2")
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .output()
        .unwrap();
    assert!(base.status.success() && seeded.status.success());
    assert_ne!(stdout(&base), stdout(&seeded));
    let again = ldk()
        .env("LDK_SEED", "2")
        .arg("reduce")
        .arg(&file)
        .arg("--ctx")
        .arg(&ctx)
        .output()
        .unwrap();
    assert_eq!(stdout(&seeded), stdout(&again));
}
