//! End-to-end runs of the `varfrac` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn varfrac(config: &Path, out_dir: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varfrac"))
        .arg("run")
        .arg(config)
        .arg("--out-dir")
        .arg(out_dir)
        .args(extra)
        .env_remove("VARFRAC_THREADS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

/// Data rows of a `quantity,value` report.
fn report_value(out_dir: &Path, key: &str) -> f64 {
    let text = fs::read_to_string(out_dir.join("report.csv")).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("{key} missing from report"))
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const SOLVE: &str = r#"{
    "task": "solve",
    "domain": {"N": 1, "n_x": 65, "n_y": 65},
    "order": {"kind": "constant", "s": 0.5},
    "data": {"kind": "sin_mode", "k": [1]},
    "compare": "spectral"
}"#;

#[test]
fn half_order_solve_matches_spectral_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(report_value(&out, "l2_error") <= 0.02);
    let vtk = fs::read_to_string(out.join("solution.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(vtk.contains("DATASET STRUCTURED_GRID\nDIMENSIONS 65 65 1\nPOINTS 4225 double\n"));
    assert_eq!(csv_rows(&out.join("trace.csv")).len(), 63);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "suite.json",
        r#"{
            "task": "inequality_suite",
            "domain": {"N": 1, "n_x": 17, "n_y": 17, "tau": 1.0},
            "order": {"kind": "step", "cells": [
                {"lo": [0.0], "hi": [0.5], "s": 0.3},
                {"lo": [0.5], "hi": [1.0], "s": 0.7}
            ]},
            "suite": {"kind": "trace", "samples": 30},
            "seed": 9
        }"#,
    );
    let runs: Vec<Vec<u8>> = [("a", "1"), ("b", "4"), ("c", "4")]
        .iter()
        .map(|(name, threads)| {
            let out = dir.path().join(name);
            let run = varfrac(&cfg, &out, &["--threads", threads]);
            assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
            fs::read(out.join("report.csv")).unwrap()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[1], runs[2]);
    let text = String::from_utf8(runs[0].clone()).unwrap();
    assert!(text.starts_with("# varfrac "));
    assert!(text.contains("\n# config_sha256 "));
}

#[test]
fn classical_hardy_suite_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "hardy.json",
        r#"{
            "task": "inequality_suite",
            "domain": {"N": 1, "n_x": 9, "n_y": 9},
            "order": {"kind": "constant", "s": 0.5},
            "suite": {"kind": "hardy_classical", "samples": 200}
        }"#,
    );
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = csv_rows(&out.join("report.csv"));
    assert_eq!(rows.len(), 200);
    assert!(rows.iter().all(|r| r[5] == "true"));
}

#[test]
fn missing_order_is_a_config_error_with_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let body = SOLVE.replace(r#""order": {"kind": "constant", "s": 0.5},"#, "");
    let cfg = write_config(dir.path(), "bad.json", &body);
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("order"));
    assert!(!out.exists());
}

#[test]
fn unknown_keys_and_bad_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        (
            "extra.json",
            SOLVE.replace("\"compare\"", "\"colour\": \"red\", \"compare\""),
        ),
        ("order.json", SOLVE.replace("\"s\": 0.5", "\"s\": 1.5")),
        ("mesh.json", SOLVE.replace("\"n_x\": 65", "\"n_x\": 1")),
        ("json.json", "{ not json".to_string()),
    ] {
        let cfg = write_config(dir.path(), name, &body);
        let out = dir.path().join(name.replace(".json", ""));
        assert_eq!(varfrac(&cfg, &out, &[]).status.code(), Some(2), "{name}");
        assert!(!out.exists(), "{name}");
    }
}

#[test]
fn iteration_cap_is_reported_as_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let body = SOLVE.replace("\"compare\"", "\"solver\": {\"max_iter\": 3}, \"compare\"");
    let cfg = write_config(dir.path(), "capped.json", &body);
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn convergence_studies_decrease() {
    let dir = tempfile::tempdir().unwrap();
    let errors = |body: &str, name: &str| -> Vec<f64> {
        let cfg = write_config(dir.path(), name, body);
        let out = dir.path().join(name.replace(".json", ""));
        let run = varfrac(&cfg, &out, &[]);
        assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
        csv_rows(&out.join("report.csv"))
            .iter()
            .filter(|r| r[6] == "false")
            .map(|r| r[4].parse().unwrap())
            .collect()
    };
    let constant = errors(
        r#"{
            "task": "convergence_study",
            "domain": {"N": 1, "n_x": 3, "n_y": 3},
            "order": {"kind": "constant", "s": 0.5},
            "data": {"kind": "sin_mode", "k": [1]},
            "ladder": [16, 32, 64]
        }"#,
        "constant.json",
    );
    assert_eq!(constant.len(), 3);
    assert!(constant.windows(2).all(|w| w[1] < w[0]), "{constant:?}");

    let step = errors(
        r#"{
            "task": "convergence_study",
            "domain": {"N": 1, "n_x": 3, "n_y": 3, "tau": 2.0, "gamma": 2.0},
            "order": {"kind": "step", "cells": [
                {"lo": [0.0], "hi": [0.5], "s": 0.3},
                {"lo": [0.5], "hi": [1.0], "s": 0.7}
            ]},
            "data": {"kind": "bump"},
            "solver": {"max_iter": 200000},
            "ladder": [8, 16, 32, 64]
        }"#,
        "step.json",
    );
    assert_eq!(step.len(), 3);
    assert!(step.windows(2).all(|w| w[1] < w[0]), "{step:?}");

    let zero = errors(
        r#"{
            "task": "convergence_study",
            "domain": {"N": 1, "n_x": 3, "n_y": 3},
            "order": {"kind": "constant", "s": 0.3},
            "data": {"kind": "zero"},
            "ladder": [4, 8, 16]
        }"#,
        "zero.json",
    );
    assert!(zero.iter().all(|&e| e == 0.0));
}

#[test]
fn nodal_csv_data_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..8)
        .map(|i| {
            let x = i as f64 / 8.0;
            format!("{x},{}\n", (std::f64::consts::PI * x).sin())
        })
        .collect();
    fs::write(dir.path().join("data.csv"), format!("x1,value\n{rows}")).unwrap();
    let cfg = write_config(
        dir.path(),
        "apply.json",
        r#"{
            "task": "extend",
            "domain": {"N": 1, "n_x": 9, "n_y": 9},
            "order": {"kind": "constant", "s": 0.5},
            "data": {"kind": "nodal_csv", "path": "data.csv"}
        }"#,
    );
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = csv_rows(&out.join("trace.csv"));
    for (i, row) in trace.iter().enumerate() {
        let x = (i + 1) as f64 / 8.0;
        assert!((row[1].parse::<f64>().unwrap() - (std::f64::consts::PI * x).sin()).abs() < 1e-15);
    }

    fs::write(dir.path().join("data.csv"), "x1,value\n0.5,1.0\n").unwrap();
    let out = dir.path().join("out_bad");
    assert_eq!(varfrac(&cfg, &out, &[]).status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn misaligned_step_warns_but_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "step.json",
        r#"{
            "task": "poincare",
            "domain": {"N": 1, "n_x": 9, "n_y": 9, "tau": 1.0, "gamma": 1.0},
            "order": {"kind": "step", "cells": [
                {"lo": [0.0], "hi": [0.3], "s": 0.4},
                {"lo": [0.3], "hi": [1.0], "s": 0.6}
            ]}
        }"#,
    );
    let out = dir.path().join("out");
    let run = varfrac(&cfg, &out, &[]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stderr).contains("warning: step breakpoint 0.3"));
    assert!(report_value(&out, "poincare_constant") > 0.0);
    assert!(!out.join("solution.vtk").exists());
}
