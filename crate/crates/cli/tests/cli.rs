use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fda_core::{load_config, read_grid, AxisKind};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn fda(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fda"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "array": {"n_half": 5, "f0_hz": 3e9, "phi_deg": [72, 180, 216, 216, 72, 0, 72, 216, 216, 180, 72]},
    "focus": {"theta0_deg": -30, "g": [1.8, 4.4, 4.4, 5.5, 4.8], "t_m_ns": -50, "r1_m": 15},
    "model": {"type": "constant", "T_ns": 30},
    "grid": {
        "t_ns": {"min": -100, "max": 50, "count": 61},
        "r_m": {"min": 0, "max": 30, "count": 61},
        "theta_deg": {"min": -90, "max": 90, "count": 37}
    }
}"#;

#[test]
fn range_angle_grid_to_stdout() {
    let out = fda(&[
        "simulate",
        "range-angle",
        "--config",
        &cfg("paper-fig1a.json"),
        "--t",
        "0ns",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# config: {"));
    assert!(lines[1].starts_with("# grid: {"));
    assert_eq!(lines[2], "r_m,theta_deg,power_db");
    assert_eq!(lines.len(), 3 + 601 * 361);
    assert!(!text.contains('\r'));
}

#[test]
fn echoed_config_reloads_identically() {
    let out = fda(&[
        "simulate",
        "range-angle",
        "--config",
        &cfg("paper-fig2b.json"),
        "--t",
        "1e-8s",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let echo = text
        .lines()
        .next()
        .unwrap()
        .strip_prefix("# config: ")
        .unwrap();
    let original = load_config(&std::fs::read_to_string(cfg("paper-fig2b.json")).unwrap()).unwrap();
    assert_eq!(load_config(echo).unwrap(), original);
}

#[test]
fn time_range_then_focus() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let grid = dir.path().join("tr.csv").to_string_lossy().into_owned();
    let out = fda(&[
        "simulate",
        "time-range",
        "--config",
        &config,
        "--theta",
        "-30deg",
        "--out",
        &grid,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());

    let parsed = read_grid(std::io::BufReader::new(std::fs::File::open(&grid).unwrap())).unwrap();
    assert_eq!(
        (parsed.axis1.kind, parsed.axis2.kind),
        (AxisKind::Time, AxisKind::Range)
    );

    let out = fda(&["focus", "--grid", &grid]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# focus velocity: "), "{text}");
    assert!(text.contains("t_ns,r_m,peak_db,ridge\n"));

    let out = fda(&[
        "focus",
        "--grid",
        &grid,
        "--format",
        "json",
        "--min-peak-db",
        "-1",
    ]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let slope = doc["velocity"]["slope"].as_f64().unwrap();
    assert!((slope / 3e8 - 1.0).abs() < 0.05, "slope {slope}");
}

#[test]
fn focus_of_range_angle_grid_is_single_peak() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let grid = dir.path().join("ra.csv").to_string_lossy().into_owned();
    assert!(fda(&[
        "simulate",
        "range-angle",
        "--config",
        &config,
        "--t",
        "30",
        "--out",
        &grid
    ])
    .status
    .success());
    let out = fda(&["focus", "--grid", &grid]);
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        "t_ns,r_m,theta_deg,peak_db,ridge\n30,24,-30,0,1\n"
    );
}

#[test]
fn verify_bundled_config_exits_zero() {
    let out = fda(&[
        "verify",
        "--config",
        &cfg("paper-fig1a.json"),
        "--samples",
        "200",
    ]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.ends_with("all checks as expected\n"));
    assert_eq!(text.lines().filter(|l| l.starts_with("[ok]")).count(), 7);
}

#[test]
fn verify_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let out = fda(&[
        "verify",
        "--config",
        &config,
        "--samples",
        "100",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["all_as_expected"], true);
    assert_eq!(doc["seed"], 0);
    let checks = doc["checks"].as_array().unwrap();
    let naive = checks
        .iter()
        .find(|c| c["name"] == "retarded-time invariance: naive")
        .unwrap();
    assert_eq!(naive["expected"], "fail");
    assert!(naive["report"]["max_relative_deviation"].as_f64().unwrap() > 1e-3);
}

#[test]
fn verify_reports_unexpected_outcome_with_exit_two() {
    // A single element radiates the same field under every law, so the
    // naive model cannot break invariance.
    let dir = tempfile::tempdir().unwrap();
    let single = SMALL
        .replace(r#""n_half": 5"#, r#""n_half": 0"#)
        .replace("[72, 180, 216, 216, 72, 0, 72, 216, 216, 180, 72]", "[0]")
        .replace("[1.8, 4.4, 4.4, 5.5, 4.8]", "[]");
    let config = write(dir.path(), "single.json", &single);
    let out = fda(&["verify", "--config", &config, "--samples", "50"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout)
        .contains("[UNEXPECTED] retarded-time invariance: naive"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unexpected outcome"));
}

#[test]
fn compare_columns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let out = fda(&["compare", "--config", &config]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[1].starts_with("# compare: {"));
    assert_eq!(lines[2], "t_ns,r_m,naive_db,causal_db,diff_db");
    assert_eq!(lines.len(), 3 + 61 * 61);
    for line in &lines[3..] {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 5);
        if f[2] != "nan" && f[3] != "nan" {
            let (n, c, d): (f64, f64, f64) = (
                f[2].parse().unwrap(),
                f[3].parse().unwrap(),
                f[4].parse().unwrap(),
            );
            assert_eq!(d, c - n);
        }
    }
}

#[test]
fn validation_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        &SMALL.replace(r#""f0_hz": 3e9"#, r#""f0_hz": -1"#),
    );
    let out = fda(&["simulate", "range-angle", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("array.f0_hz"));

    let missing = dir.path().join("nope.json").to_string_lossy().into_owned();
    assert_eq!(
        fda(&["verify", "--config", &missing]).status.code(),
        Some(1)
    );
    assert_eq!(
        fda(&[
            "simulate",
            "range-angle",
            "--config",
            &cfg("paper-fig1a.json"),
            "--t",
            "3 parsecs"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        fda(&[
            "simulate",
            "time-range",
            "--config",
            &cfg("paper-fig1a.json"),
            "--theta",
            "30grad"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(fda(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fda(&[]).status.code(), Some(1));

    let not_a_grid = write(dir.path(), "grid.csv", "r_m,theta_deg,power_db\n0,0,0\n");
    assert_eq!(
        fda(&["focus", "--grid", &not_a_grid]).status.code(),
        Some(1)
    );
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(fda(&["--help"]).status.code(), Some(0));
    assert_eq!(fda(&["--version"]).status.code(), Some(0));
    assert_eq!(fda_cli::cli_main(["fda", "simulate", "--help"]), 0);
}

#[test]
fn serial_flag_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.json", SMALL);
    let a = fda(&["compare", "--config", &config]).stdout;
    let b = fda(&["compare", "--config", &config, "--serial"]).stdout;
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
