//! End-to-end checks of the command-line interface: exit codes, output
//! determinism, and the JSON round-trip contract.

use std::process::Command;

fn wallx() -> Command {
    Command::new(env!("CARGO_BIN_EXE_wallx"))
}

#[test]
fn walls_lists_half_integer_points() {
    let out = wallx()
        .args(["walls", "--g", "2", "--n", "1", "--d", "1", "--window", "-2,2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let walls = json["walls"].as_array().unwrap();
    let divisorial: Vec<_> = walls
        .iter()
        .filter(|w| w["representative"]["t"] == 1)
        .collect();
    // x_{1,1,{1}} = k + 1/2 for k in {-2,-1,0,1}
    assert_eq!(divisorial.len(), 4);
}

#[test]
fn cross_emits_reparsable_class_and_checks_oracle() {
    let out = wallx()
        .args([
            "cross", "--g", "2", "--n", "1", "--d", "1", "--wall", "1,1,{1},-1", "--base",
            "--check",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["oracle"], "equal");
    assert_eq!(json["terms"].as_array().unwrap().len(), 1);
    assert_eq!(json["terms"][0]["coeff"], "-1");
    // byte stability across runs
    let out2 = wallx()
        .args([
            "cross", "--g", "2", "--n", "1", "--d", "1", "--wall", "1,1,{1},-1", "--base",
            "--check",
        ])
        .output()
        .unwrap();
    assert_eq!(out.stdout, out2.stdout);
}

#[test]
fn invalid_degree_exits_two() {
    let out = wallx()
        .args(["cross", "--g", "2", "--n", "1", "--d", "2", "--wall", "1,1,{1},0", "--base"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn central_wall_disjoint_exits_three() {
    let out = wallx()
        .args(["cross", "--g", "2", "--n", "1", "--d", "0", "--wall", "0,2,{1},1", "--disjoint"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_suite_exits_two() {
    let out = wallx().args(["verify", "--suite", "nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forests_suite_passes() {
    let out = wallx().args(["verify", "--suite", "forests"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["suite"], "forests");
    assert!(json["checks"][0]["failed"] == 0);
}
