//! Black-box tests of the command-line interface: exit codes, validation
//! diagnostics, the bundled catalog, and the CSV output contract.

use std::process::Command;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rieszkit"))
}

#[test]
fn list_prints_bundled_catalog() {
    let out = exe().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "ball_robin",
        "half_space_gauss",
        "rotation_body_cusp",
        "example_ex2",
        "theorem_ap_suite",
        "kelvin_identity",
        "qp_oracle_crosscheck",
    ] {
        assert!(text.lines().any(|l| l == name), "missing {name} in:\n{text}");
    }
}

#[test]
fn validate_accepts_every_bundled_scenario() {
    for name in ["ball_robin", "half_space_gauss", "rotation_body_cusp", "example_ex2"] {
        let out = exe().args(["validate", "--config", name]).output().unwrap();
        assert!(out.status.success(), "{name} failed validation");
    }
}

#[test]
fn validate_rejects_unit_shell_ratio_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
name = "bad"
checks = ["wiener"]

[riesz]
dim = 3
alpha = 2.0

[set]
shape = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0
resolutions = [4]

[wiener]
mode = "irregular_point"
center = [0.0, 0.0, 0.0]
ratio = 1.0
max_shells = 4
"#,
    )
    .unwrap();
    let out = exe().args(["validate", "--config", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("wiener.ratio"), "diagnostic must name the field, got:\n{err}");
}

#[test]
fn validate_rejects_unknown_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        r#"
name = "bad"
checks = ["frobnicate"]

[riesz]
dim = 3
alpha = 2.0

[set]
shape = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0
resolutions = [4]
"#,
    )
    .unwrap();
    let out = exe().args(["validate", "--config", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("frobnicate"));
}

#[test]
fn missing_config_exits_with_validation_code() {
    let out = exe().args(["run", "--config", "/nonexistent/nope.toml"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_reports_and_exits_zero_on_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = exe()
        .args(["run", "--config", "qp_oracle_crosscheck", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(parsed["schema_version"], 1);
    assert_eq!(parsed["scenario"], "qp_oracle_crosscheck");
    assert_eq!(parsed["summary"]["failed"], 0);
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fail.toml");
    // A bounded set has a finite shell series at the origin; expecting
    // divergence must fail the check (but not crash the run).
    std::fs::write(
        &path,
        r#"
name = "expect_fail"
checks = ["wiener"]

[riesz]
dim = 3
alpha = 2.0

[set]
shape = "ball"
center = [0.0, 0.0, 0.0]
radius = 1.0
resolutions = [4]

[wiener]
mode = "irregular_point"
center = [3.0, 0.0, 0.0]
ratio = 0.5
max_shells = 6
expected = "divergent"
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = exe()
        .args(["run", "--config", path.to_str().unwrap(), "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn runtime_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = exe()
        .args([
            "run",
            "--config",
            "kelvin_identity",
            "--max-points",
            "10",
            "--out",
        ])
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn csv_tables_use_header_dot_decimals_and_lf() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = exe()
        .args(["run", "--config", "kelvin_identity", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read(out_dir.join("capacity_ladder.csv")).unwrap();
    assert!(!csv.contains(&b'\r'), "CSV must use LF line endings");
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "resolution,truncation,n_points,capacity,robin_energy,mass,norm_sq"
    );
    let first = lines.next().unwrap();
    assert!(first.contains('.'), "decimal point expected in {first}");
    assert_eq!(first.split(',').count(), 7, "row width must match the header");
}

#[test]
fn check_filter_restricts_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = exe()
        .args([
            "run",
            "--config",
            "kelvin_identity",
            "--check",
            "equilibrium",
            "--out",
        ])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let checks = report["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 1);
    assert_eq!(checks[0]["check"], "equilibrium");
    let out =
        exe().args(["run", "--config", "kelvin_identity", "--check", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
