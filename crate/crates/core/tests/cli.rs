// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .current_dir(dir)
        .env_remove("CTAP_SIM_THREADS")
        .output()
        .expect("sim runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8(b.to_vec()).unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p.to_str().unwrap().to_string()
}

const RUN: &str = r#"{ "kind": "run", "scheme": "ctap3", "omega_max_rad_ns": 10, "t_max_ns": 8 }"#;
const SWEEP: &str = r#"{ "kind": "sweep", "scheme": "ctapn", "n_sites": 5, "omega_max_rad_ns": 10,
    "gamma_grid_rad_ns": [0, 0.1], "t_max_grid_ns": [4, 8], "seed": 7 }"#;

#[test]
fn run_writes_trajectory_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "run.json", RUN);
    let o = sim(tmp.path(), &["run", "-c", &cfg, "--out", "res"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let summary = text(&o.stdout);
    assert!(summary.starts_with("error="), "{summary}");
    assert!(summary.contains(" max_mid_pop=") && summary.contains(" max_adiab="));
    let csv = fs::read_to_string(tmp.path().join("res/run.csv")).unwrap();
    assert!(csv.starts_with("# ctap-sim version: "));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "t,p1,p2,p3,purity,adiab");
    let last = csv.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|x| x.parse().unwrap()).collect();
    assert!((cols[0] - 8.0).abs() < 1e-12);
    assert!(cols[3] > 0.9);
}

#[test]
fn spin_run_reports_phase_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "run.json",
        r#"{ "kind": "run", "scheme": "ctap3", "omega_max_rad_ns": 10, "t_max_ns": 8,
            "spin_mode": "site_spin", "alpha": [0.6, 0], "beta": [0, 0.8], "adiabaticity": false }"#,
    );
    let o = sim(tmp.path(), &["run", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let s = text(&o.stdout);
    assert!(s.contains("max_adiab=NaN"));
    assert!(s.contains(" spin_phase_error="));
    let csv = fs::read_to_string(tmp.path().join("out/run.csv")).unwrap();
    assert!(csv.lines().any(|l| l == "t,p1,p2,p3,purity"));
}

#[test]
fn sweep_plot_does_not_change_the_csv() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    let a = sim(tmp.path(), &["sweep", "-c", &cfg, "--out", "a"]);
    let b = sim(tmp.path(), &["sweep", "-c", &cfg, "--out", "b", "--plot"]);
    for o in [&a, &b] {
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        assert_eq!(text(&o.stdout), "points=4 failed=0 adiabatic=0\n");
        assert!(text(&o.stderr).contains("point 4/4"));
    }
    let ca = fs::read(tmp.path().join("a/sweep.csv")).unwrap();
    let cb = fs::read(tmp.path().join("b/sweep.csv")).unwrap();
    assert_eq!(ca, cb);
    assert!(!tmp.path().join("a/sweep.svg").exists());
    let svg = fs::read_to_string(tmp.path().join("b/sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let csv = text(&ca);
    assert!(csv.contains("# seed: 7\n"));
    assert!(csv.contains("\ngamma,t_max,error,max_mid_pop,max_adiab,adiabatic_flag\n"));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 5);
}

#[test]
fn config_echo_reproduces_the_sweep() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    assert_eq!(
        sim(tmp.path(), &["sweep", "-c", &cfg, "--out", "a"])
            .status
            .code(),
        Some(0)
    );
    let csv = fs::read_to_string(tmp.path().join("a/sweep.csv")).unwrap();
    let echo = csv
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .unwrap();
    let again = write_config(tmp.path(), "echo.json", echo);
    assert_eq!(
        sim(tmp.path(), &["sweep", "-c", &again, "--out", "b"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        csv,
        fs::read_to_string(tmp.path().join("b/sweep.csv")).unwrap()
    );
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "sweep.json", SWEEP);
    let one = sim(
        tmp.path(),
        &["sweep", "-c", &cfg, "--out", "one", "--threads", "1"],
    );
    let env = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(["sweep", "-c", &cfg, "--out", "env"])
        .current_dir(tmp.path())
        .env("CTAP_SIM_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(env.status.code(), Some(0));
    assert_eq!(
        fs::read(tmp.path().join("one/sweep.csv")).unwrap(),
        fs::read(tmp.path().join("env/sweep.csv")).unwrap()
    );
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "d.json",
        r#"{ "kind": "disorder", "scheme": "ctapn", "n_sites": 5, "omega_max_rad_ns": 10,
            "t_max_ns": 6, "sigma": 0.2, "trials": 3, "seed": 1 }"#,
    );
    let a = sim(tmp.path(), &["disorder", "-c", &cfg, "--out", "a"]);
    let b = sim(
        tmp.path(),
        &["disorder", "-c", &cfg, "--out", "b", "--seed", "2"],
    );
    assert_eq!(a.status.code(), Some(0), "{}", text(&a.stderr));
    assert_eq!(b.status.code(), Some(0));
    assert!(text(&a.stdout).starts_with("mean="));
    let ca = fs::read_to_string(tmp.path().join("a/disorder.csv")).unwrap();
    let cb = fs::read_to_string(tmp.path().join("b/disorder.csv")).unwrap();
    assert!(ca.contains("# seed: 1\n") && cb.contains("# seed: 2\n"));
    assert!(ca.contains("\ntrial,error,factors\n"));
    assert_ne!(ca, cb);
}

#[test]
fn darkstate_prints_the_three_four_five_case() {
    let tmp = TempDir::new().unwrap();
    let o = sim(
        tmp.path(),
        &["darkstate", "--o12", "3", "--o23", "4", "--delta", "0"],
    );
    assert_eq!(o.status.code(), Some(0));
    let s = text(&o.stdout);
    let get = |k: &str| {
        s.lines()
            .find_map(|l| l.strip_prefix(&format!("{k}=")))
            .unwrap()
            .to_string()
    };
    assert!((get("theta1").parse::<f64>().unwrap() - 0.6435).abs() < 1e-4);
    let d0: Vec<f64> = get("d_zero")
        .trim_matches(|c| c == '(' || c == ')')
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    for (x, want) in d0.iter().zip([0.8, 0.0, -0.6]) {
        assert!((x - want).abs() < 1e-12);
    }
    assert!((get("e_plus").parse::<f64>().unwrap().abs() - 5.0).abs() < 1e-12);
}

#[test]
fn compare_writes_both_orderings() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{ "kind": "compare", "omega_max_rad_ns": 10, "t_max_ns": 8, "gamma_rad_ns": 0.01 }"#,
    );
    let o = sim(tmp.path(), &["compare", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let s = text(&o.stdout);
    assert!(s.starts_with("ctap3 error="));
    assert!(s.contains("\nintuitive3 error="));
    let csv = fs::read_to_string(tmp.path().join("out/compare.csv")).unwrap();
    assert!(csv.contains("\nscheme,error,max_mid_pop\nctap3,"));
}

#[test]
fn version_prints_the_package_version() {
    let tmp = TempDir::new().unwrap();
    let o = sim(tmp.path(), &["version"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        text(&o.stdout),
        format!("sim {}\n", env!("CARGO_PKG_VERSION"))
    );
}

fn single_error_line(o: &Output, code: i32, kind: &str) -> String {
    assert_eq!(o.status.code(), Some(code), "{}", text(&o.stderr));
    let e = text(&o.stderr);
    let lines: Vec<_> = e.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(lines.len(), 1, "{e}");
    assert!(
        lines[0].starts_with(&format!("error: code={code} kind={kind} message=\"")),
        "{e}"
    );
    lines[0].to_string()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    single_error_line(&sim(tmp.path(), &["frobnicate"]), 2, "usage");
    single_error_line(&sim(tmp.path(), &["run"]), 2, "usage");
}

#[test]
fn bad_configs_exit_three() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        (
            r#"{ "kind": "run", "scheme": "ctap3", "t_max_ns": 8, "tmax": 1 }"#,
            "tmax",
        ),
        (
            r#"{ "kind": "run", "scheme": "ctap3", "t_max_ns": -8 }"#,
            "t_max",
        ),
        (
            r#"{ "kind": "run", "scheme": "ctap3", "t_max_ns": 8, "gamma_rad_ns": -1 }"#,
            "gamma",
        ),
        (
            r#"{ "kind": "sweep", "scheme": "ctap3", "gamma_grid_rad_ns": [0], "t_max_grid_ns": [1] }"#,
            "kind",
        ),
        ("{ not json", ""),
    ];
    for (json, needle) in cases {
        let cfg = write_config(tmp.path(), "bad.json", json);
        let line = single_error_line(&sim(tmp.path(), &["run", "-c", &cfg]), 3, "config");
        assert!(line.contains(needle), "{line}");
    }
    let missing = sim(tmp.path(), &["run", "-c", "does-not-exist.json"]);
    single_error_line(&missing, 3, "config");
}

#[test]
fn invariant_violation_exits_four() {
    // intuitive ordering at the largest step dips just below the positivity tolerance
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "i.json",
        r#"{ "kind": "run", "scheme": "intuitive3", "t_max_ns": 80, "adiabaticity": false }"#,
    );
    let line = single_error_line(&sim(tmp.path(), &["run", "-c", &cfg]), 4, "invariant");
    assert!(line.contains("eigenvalue"), "{line}");
}
