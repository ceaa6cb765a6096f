//! Runs the quick examples (built by `cargo test`) so they cannot rot.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> String {
    // tests live in target/<profile>/deps, examples in target/<profile>/examples
    let exe = std::env::current_exe().unwrap();
    let dir: PathBuf = exe.parent().and_then(|d| d.parent()).unwrap().join("examples");
    let path = dir.join(format!("{name}{}", std::env::consts::EXE_SUFFIX));
    let out = Command::new(&path).output().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn nbs_allocation() {
    assert!(example("nbs_allocation").contains("payoffs [14.0, 24.0]"));
}

#[test]
fn sioux_falls_network() {
    let out = example("sioux_falls_network");
    assert!(out.contains("48 nodes, 200 edges"));
    assert!(out.contains("16 crossing candidates"));
}

#[test]
fn demand_generation() {
    assert!(example("demand_generation").contains("552 requests"));
}

#[test]
fn logit_assignment() {
    assert!(example("logit_assignment").contains("p(10, 10) = 0.5"));
}

#[test]
fn region_metrics() {
    assert_eq!(example("region_metrics").lines().count(), 4);
}

#[test]
fn design_optimizer() {
    assert!(example("design_optimizer").contains("local reaches"));
}

#[test]
fn stage_game() {
    assert!(example("stage_game").contains("agreement"));
}

#[test]
fn ue_oracle() {
    assert!(example("ue_oracle").contains("pigou road flow"));
}

#[test]
fn custom_network() {
    let out = example("custom_network");
    assert!(out.contains("rejected: invalid network"));
    assert!(out.contains("name = demo"));
}

#[test]
fn scenario_run() {
    assert!(example("scenario_run").contains("CIR 0.500"));
}
