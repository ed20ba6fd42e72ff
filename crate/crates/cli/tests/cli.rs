//! End-to-end runs of the binary: exit codes, round-trips, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_apxdeg"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

#[test]
fn construct_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "construct",
            "main-collision",
            "--N",
            "4",
            "--R",
            "4",
            "--delta",
            "1/20",
            "--K",
            "2",
            "--out",
            "psi.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(
        &[
            "verify",
            "psi.json",
            "--function",
            "collision",
            "--epsilon",
            "7/10",
            "--degree",
            "1",
            "--mode",
            "exact",
            "--out",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    assert!(report.contains("\"verdict\": true"));
}

#[test]
fn verify_rejects_impossible_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    run(
        &[
            "construct",
            "main-collision",
            "--N",
            "4",
            "--R",
            "4",
            "--delta",
            "1/20",
            "--K",
            "2",
            "--out",
            "psi.json",
        ],
        dir.path(),
    );
    // Correlation can never strictly exceed the L1 norm.
    let out = run(
        &[
            "verify",
            "psi.json",
            "--function",
            "collision",
            "--epsilon",
            "1",
            "--degree",
            "0",
            "--mode",
            "exact",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn precondition_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "construct",
            "main-collision",
            "--N",
            "6",
            "--R",
            "8",
            "--delta",
            "1/20",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"error\""), "stderr: {stderr}");
}

#[test]
fn exact_verification_over_budget_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // L = 4 gives N = 24 blocks over a range of 32: far beyond enumeration.
    let out = run(
        &[
            "construct",
            "weak-collision",
            "--L",
            "4",
            "--R",
            "32",
            "--delta",
            "1/4",
            "--out",
            "weak.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = run(
        &[
            "verify",
            "weak.json",
            "--function",
            "collision",
            "--epsilon",
            "1/3",
            "--degree",
            "0",
            "--mode",
            "exact",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));

    // Conditional mode still verifies the class-level facts.
    let out = run(
        &[
            "verify",
            "weak.json",
            "--function",
            "collision",
            "--epsilon",
            "1/3",
            "--degree",
            "0",
            "--mode",
            "conditional",
            "--out",
            "cond.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("cond.json")).unwrap();
    assert!(report.contains("conditional_basis"));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = run(
            &[
                "construct",
                "main-collision",
                "--N",
                "4",
                "--R",
                "4",
                "--delta",
                "1/20",
                "--K",
                "2",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn oracle_emits_epsilon_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "oracle",
            "--function",
            "collision",
            "--N",
            "4",
            "--R",
            "4",
            "--degrees",
            "0,1",
            "--csv",
            "eps.csv",
            "--out",
            "oracle.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(dir.path().join("eps.csv")).unwrap();
    assert_eq!(csv, "d,epsilon_opt\n0,1/1\n1,1/1\n");
}

#[test]
fn ed_reduction_via_files() {
    let dir = tempfile::tempdir().unwrap();
    run(
        &[
            "construct",
            "main-collision",
            "--N",
            "4",
            "--R",
            "4",
            "--delta",
            "1/20",
            "--K",
            "2",
            "--out",
            "psi.json",
        ],
        dir.path(),
    );
    let out = run(
        &[
            "construct",
            "ed-from-collision",
            "--source",
            "psi.json",
            "--M",
            "3",
            "--out",
            "phi.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = run(
        &[
            "verify",
            "phi.json",
            "--function",
            "ed",
            "--epsilon",
            "9/10",
            "--degree",
            "1",
            "--mode",
            "exact",
        ],
        dir.path(),
    );
    assert!(out.status.success());
}

#[test]
fn symcheck_and_upperbound_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "symcheck", "--N", "4", "--R", "4", "--max-s", "2", "--out", "sym.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let out = run(
        &[
            "upperbound",
            "ed",
            "--M",
            "3",
            "--R",
            "4",
            "--out",
            "ed.json",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let report = std::fs::read_to_string(dir.path().join("ed.json")).unwrap();
    assert!(report.contains("\"bound_met\": true"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{ "delta": "1/20", "k_cap": 2, "budget": 16777216 }"#,
    )
    .unwrap();
    let out = run(
        &[
            "--config",
            "run.json",
            "construct",
            "main-collision",
            "--N",
            "4",
            "--R",
            "4",
            "--out",
            "psi.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let witness = std::fs::read_to_string(dir.path().join("psi.json")).unwrap();
    assert!(witness.contains("\"delta\": \"1/20\""));
}

#[test]
fn shipped_default_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let config = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json");
    let out = run(
        &[
            "--config",
            config,
            "construct",
            "main-collision",
            "--N",
            "4",
            "--R",
            "4",
            "--out",
            "psi.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(
        &[
            "--config",
            config,
            "verify",
            "psi.json",
            "--function",
            "collision",
            "--epsilon",
            "7/10",
            "--degree",
            "1",
            "--mode",
            "exact",
        ],
        dir.path(),
    );
    assert!(out.status.success());
}
