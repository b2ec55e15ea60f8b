// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end behaviour of the `chargeopt` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chargeopt_core::pulse::{shape, ShapeConfig};

const SMALL_QUBIT: &str = r#"
model = "qubit"
seed = 7

[system]
omega = 1.0
g = 0.2
gamma = 0.05
mu = 0.5
n_bath = 0.0
cells = 1

[grid]
tau_in_units_of_pi_over_g = 1.0
n_steps = 200

[shape]
kappa = 0.5
lambda = 3.0

[stopping]
max_iters = 15
delta_j_tol = 1e-7

[target]
kind = "excited_battery"

[baseline]
amplitude = 0.5
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chargeopt"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|x| x.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_coupling_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL_QUBIT.replace("g = 0.2\n", ""));
    let o = run(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("`g`"), "{err}");
    assert!(err.contains("c.toml:"), "{err}");
}

#[test]
fn unknown_key_is_rejected_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL_QUBIT.replace("gamma = 0.05", "gamma = 0.05\ngama = 0.05"));
    let o = run(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("gama"), "{err}");
    assert!(err.contains("c.toml:9:"), "{err}");
}

#[test]
fn zero_iterations_return_the_initial_guess() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SMALL_QUBIT.replace("max_iters = 15", "max_iters = 0"));
    let out = dir.path().join("out");
    let o = run(&["run", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    let tau = std::f64::consts::PI / 0.2;
    let sc = ShapeConfig::with_fractions(tau, 0.005, 0.005, 0.5, 3.0).unwrap();
    let (header, rows) = read_csv(&out.join("pulse.csv"));
    assert_eq!(header, ["t [1/omega]", "eps_opt [omega]", "eps_osc [omega]"]);
    assert_eq!(rows.len(), 201);
    for r in &rows {
        let guess = 0.5 * shape(r[0], &sc, tau).unwrap();
        assert!((r[1] - guess).abs() < 1e-15, "t = {}: {} vs {guess}", r[0], r[1]);
    }
    let (_, conv) = read_csv(&out.join("convergence.csv"));
    assert_eq!(conv.len(), 1);
    assert_eq!(conv[0][0], 0.0);
}

#[test]
fn report_records_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SMALL_QUBIT);
    let out = dir.path().join("out");
    let o = run(&["run", "--config", s(&cfg), "--out", s(&out), "--seed", "11", "--emit-plots"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let tau = report["config"]["grid"]["tau"].as_f64().unwrap();
    assert!((tau - std::f64::consts::PI / 0.2).abs() < 1e-12);
    assert_eq!(report["config"]["seed"], 11);
    assert_eq!(report["config"]["shape"]["t_on_fraction"], 0.005);
    let baseline = report["report"]["baseline_cost"].as_f64().unwrap();
    assert!((baseline - 31.42).abs() < 1e-2);
    for f in ["pulse.svg", "trajectory.svg", "convergence.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

const SWEEP: &str = "\n[sweep]\nparameter = \"n_bath\"\nvalues = [0.0, 1.0, 4.0]\n";

fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn temperature_sweep_is_deterministic_and_contains_the_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &format!("{SMALL_QUBIT}{SWEEP}"));
    let out = dir.path().join("out");

    let o = run(&["sweep-temperature", "--config", s(&cfg), "--out", s(&out), "--workers", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let first = snapshot(&out);
    fs::remove_dir_all(&out).unwrap();
    let o = run(&["sweep-temperature", "--config", s(&cfg), "--out", s(&out), "--workers", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(first, snapshot(&out), "outputs differ between worker counts");

    let (header, rows) = read_csv(&out.join("sweep.csv"));
    assert_eq!(header[0], "N_b [1]");
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), [0.0, 1.0, 4.0]);
    for r in &rows {
        assert!((r[4] - 31.42).abs() < 1e-2, "baseline cost {}", r[4]);
    }

    // The N_b = 0 entry is the plain run of the same configuration.
    let single = write_config(dir.path(), "single.toml", SMALL_QUBIT);
    let run_out = dir.path().join("single");
    let o = run(&["run", "--config", s(&single), "--out", s(&run_out)]);
    assert!(o.status.success());
    for f in ["pulse.csv", "trajectory.csv", "convergence.csv"] {
        assert_eq!(
            fs::read(run_out.join(f)).unwrap(),
            fs::read(out.join("points/n_bath_000").join(f)).unwrap(),
            "{f}"
        );
    }
    let (_, pulse) = read_csv(&run_out.join("convergence.csv"));
    let final_cost = pulse.last().unwrap()[4];
    assert!((rows[0][3] - final_cost).abs() < 1e-12);
}

#[test]
fn temperature_sweep_requires_the_qubit_model() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_QUBIT}{SWEEP}").replace("model = \"qubit\"", "model = \"oscillator\"").replace("cells = 1\n", "");
    let text = text.replace("kind = \"excited_battery\"", "kind = \"coherent_battery\"\nalpha = [0.5, 0.5]");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let o = run(&["sweep-temperature", "--config", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("model"));
}

#[test]
fn single_lambda_sweep_degenerates_to_the_convergence_history() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_QUBIT}\n[sweep]\nparameter = \"lambda\"\nvalues = [3.0]\n");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    let o = run(&["sweep-lambda", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, pareto) = read_csv(&out.join("pareto.csv"));
    assert_eq!(header, ["lambda [1]", "step [1]", "fidelity [1]", "W [omega]", "J [1]"]);
    let (_, conv) = read_csv(&out.join("points/lambda_000/convergence.csv"));
    assert_eq!(pareto.len(), conv.len());
    for (p, c) in pareto.iter().zip(&conv) {
        assert_eq!(p[0], 3.0);
        assert_eq!((p[1], p[2], p[3], p[4]), (c[0], c[3], c[4], c[1]));
    }
    assert!(!out.join("protocol.json").exists());
}

#[test]
fn lambda_sweep_recommends_a_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL_QUBIT}\n[sweep]\nparameter = \"lambda\"\nvalues = [1.0, 3.0]\n\n[protocol]\nfidelity_tol = 1e-3\nmax_iters_high = 60\n");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("out");
    let o = run(&["sweep-lambda", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("protocol.json")).unwrap()).unwrap();
    assert_eq!(p["lambda_low"], 1.0);
    assert_eq!(p["lambda_high"], 3.0);
    assert!(!p["recommendation"].as_str().unwrap().is_empty());
    let (_, rows) = read_csv(&out.join("pareto.csv"));
    assert!(rows.iter().any(|r| r[0] == 1.0) && rows.iter().any(|r| r[0] == 3.0));
}

#[test]
fn quick_validation_passes() {
    let o = run(&["validate", "--quick"]);
    let table = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{table}{}", stderr(&o));
    assert_eq!(table.lines().filter(|l| l.starts_with("PASS")).count(), 8, "{table}");
}

#[test]
fn corrupted_backward_generator_fails_validation() {
    let o = run(&["validate", "--quick", "--corrupt-ab"]);
    assert_eq!(o.status.code(), Some(1));
    let table = String::from_utf8_lossy(&o.stdout);
    let row = table.lines().find(|l| l.contains("A_f - A_b = M")).unwrap();
    assert!(row.starts_with("FAIL"), "{row}");
}

#[test]
fn undersized_truncation_is_reported() {
    let o = run(&["validate", "--quick", "--truncation", "5"]);
    assert_eq!(o.status.code(), Some(1));
    let table = String::from_utf8_lossy(&o.stdout);
    let row = table.lines().find(|l| l.contains("moments vs Fock")).unwrap();
    assert!(row.starts_with("FAIL") && row.contains("too small"), "{row}");
}
