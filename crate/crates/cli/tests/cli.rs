use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neutral-lame"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn record(out: &Output) -> serde_json::Value {
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(stdout.lines().count(), 1, "{stdout}");
    serde_json::from_str(&stdout).unwrap()
}

#[test]
fn check_neutral_quiet_prints_only_the_record() {
    let path = scenario("conductor_neutral.toml");
    let out = run(&[
        "check-neutral",
        "--scenario",
        path.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stderr.is_empty());
    let r = record(&out);
    assert_eq!(r["status"], "ok");
    assert!(r["outputs"]["residual"].as_f64().unwrap().abs() <= 1e-12);
    assert!(r["timestamp"].is_null());
}

#[test]
fn validation_failures_exit_2_with_field_paths() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[geometry.disks]\nr1 = 3.0\nr2 = 2.0\n[phases]\ncore = { sigma = 1.0 }\nshell = { mu = 1.0, kappa = 1.0 }\nmatrix = { mu = 1.0, kappa = 2.0 }\n",
    )
    .unwrap();
    let out = run(&["solve-disk", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("geometry.disks.r1"), "{stderr}");
    assert!(stderr.contains("phases.core"), "{stderr}");

    let out = run(&["solve-disk", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn override_out_of_range_is_a_validation_failure() {
    let path = scenario("homogeneous.toml");
    let out = run(&[
        "solve-bem",
        "--scenario",
        path.to_str().unwrap(),
        "--nodes",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerics.nodes"));
}

#[test]
fn find_neutral_without_sign_change_exits_3_and_writes_scan() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("narrow.toml");
    let text = std::fs::read_to_string(scenario("bulk_template.toml")).unwrap();
    std::fs::write(&path, format!("{text}bracket = [2.0, 2.5]\n")).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "find-neutral",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let r = record(&out);
    assert_eq!(r["status"], "error");
    assert!(!r["outputs"]["scan"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(out_dir.join("find_neutral_scan.csv")).unwrap();
    assert!(csv.starts_with("kappa_m,objective\n"));
    assert_eq!(csv.lines().count(), 65);
    assert!(String::from_utf8_lossy(&out.stderr).contains("sign"));
}

#[test]
fn overrides_change_the_digest_and_records_append() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("bulk_neutral.toml");
    let out_dir = dir.path().to_str().unwrap();
    let base = record(&run(&[
        "solve-disk",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out_dir,
    ]));
    let changed = record(&run(&[
        "solve-disk",
        "--scenario",
        path.to_str().unwrap(),
        "--out",
        out_dir,
        "--order",
        "12",
    ]));
    assert_ne!(base["scenario_digest"], changed["scenario_digest"]);
    assert_eq!(changed["outputs"]["order"], 12);
    let lines = std::fs::read_to_string(dir.path().join("records.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 2);
}

#[test]
fn timestamp_follows_source_date_epoch() {
    let path = scenario("conductor_neutral.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_neutral-lame"))
        .args([
            "check-neutral",
            "--scenario",
            path.to_str().unwrap(),
            "--quiet",
            "--timestamp",
        ])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert_eq!(record(&out)["timestamp"], 1_700_000_000u64);
    let out = run(&[
        "check-neutral",
        "--scenario",
        path.to_str().unwrap(),
        "--quiet",
        "--timestamp",
    ]);
    assert!(record(&out)["timestamp"].as_u64().unwrap() > 1_700_000_000);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let path = scenario("wavy_bem.toml");
    for d in &dirs {
        let out = run(&[
            "solve-bem",
            "--scenario",
            path.to_str().unwrap(),
            "--nodes",
            "64",
            "--out",
            d.path().to_str().unwrap(),
            "--quiet",
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    for name in ["records.jsonl", "solve_bem_densities.csv"] {
        assert_eq!(
            std::fs::read(dirs[0].path().join(name)).unwrap(),
            std::fs::read(dirs[1].path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn unknown_command_is_rejected() {
    let path = scenario("homogeneous.toml");
    let out = run(&["solve", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
