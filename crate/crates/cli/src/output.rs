// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Result files: CSV tables with unit-bearing headers, and the JSON report.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! crashed run never leaves a half-written table behind.

use std::io::Write;
use std::path::{Path, PathBuf};

use chargeopt_core::energetics::ChargingReport;
use chargeopt_core::krotov::{OptimizationRecord, OptimizationResult, ParetoRecord, StopReason};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::scenario::RunOutcome;

#[derive(Debug, thiserror::Error)]
#[error("{path}: {source}")]
pub struct OutputError {
    pub path: PathBuf,
    #[source]
    pub source: std::io::Error,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
    move |source| OutputError {
        path: path.to_path_buf(),
        source,
    }
}

/// Fixed 17-significant-digit scientific notation; round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// A table cell: floats are written with [`fmt17`], counters verbatim.
#[derive(Debug, Clone, Copy)]
pub enum Cell {
    Real(f64),
    Count(usize),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Real(x) => fmt17(x),
            Cell::Count(n) => n.to_string(),
        }
    }
}

/// Writes `bytes` to `path` atomically.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| OutputError {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> Result<(), OutputError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| OutputError {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(row.into_iter().map(Cell::render)).map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| OutputError {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    })?;
    write_atomic(path, &bytes)
}

pub const PULSE_HEADER: [&str; 3] = ["t [1/omega]", "eps_opt [omega]", "eps_osc [omega]"];
pub const TRAJECTORY_HEADER: [&str; 5] = [
    "t [1/omega]",
    "E_B_opt [omega]",
    "ergotropy_B_opt [omega]",
    "E_B_osc [omega]",
    "ergotropy_B_osc [omega]",
];
pub const CONVERGENCE_HEADER: [&str; 5] = ["iteration [1]", "J [1]", "J_tau [1]", "fidelity [1]", "W [omega]"];
pub const SWEEP_HEADER: [&str; 5] = [
    "N_b [1]",
    "ergotropy_opt [omega]",
    "ergotropy_osc [omega]",
    "W_opt [omega]",
    "W_osc [omega]",
];
pub const PARETO_HEADER: [&str; 5] = ["lambda [1]", "step [1]", "fidelity [1]", "W [omega]", "J [1]"];

pub fn pulse_rows(times: &[f64], opt: &[f64], osc: &[f64]) -> Vec<Vec<Cell>> {
    times
        .iter()
        .zip(opt)
        .zip(osc)
        .map(|((&t, &a), &b)| vec![Cell::Real(t), Cell::Real(a), Cell::Real(b)])
        .collect()
}

pub fn trajectory_rows(r: &ChargingReport) -> Vec<Vec<Cell>> {
    (0..r.times.len())
        .map(|k| {
            vec![
                Cell::Real(r.times[k]),
                Cell::Real(r.battery_energy[k]),
                Cell::Real(r.battery_ergotropy[k]),
                Cell::Real(r.baseline_energy[k]),
                Cell::Real(r.baseline_ergotropy[k]),
            ]
        })
        .collect()
}

pub fn convergence_rows(records: &[OptimizationRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            vec![
                Cell::Count(r.iteration),
                Cell::Real(r.j),
                Cell::Real(r.j_tau),
                Cell::Real(r.fidelity),
                Cell::Real(r.pulse_cost),
            ]
        })
        .collect()
}

pub fn pareto_rows(records: &[ParetoRecord]) -> Vec<Vec<Cell>> {
    records
        .iter()
        .map(|r| {
            vec![
                Cell::Real(r.lambda),
                Cell::Count(r.step),
                Cell::Real(r.fidelity),
                Cell::Real(r.cost),
                Cell::Real(r.j),
            ]
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct ReportSummary {
    pub pulse_cost: f64,
    pub baseline_cost: f64,
    pub final_ergotropy: f64,
    pub final_baseline_ergotropy: f64,
    pub final_energy: f64,
    pub final_baseline_energy: f64,
    /// Percent; `null` when undefined.
    pub alpha_e: Option<f64>,
    pub alpha_w: Option<f64>,
    pub final_fidelity: f64,
}

impl From<&ChargingReport> for ReportSummary {
    fn from(r: &ChargingReport) -> Self {
        Self {
            pulse_cost: r.pulse_cost,
            baseline_cost: r.baseline_cost,
            final_ergotropy: r.final_ergotropy(),
            final_baseline_ergotropy: r.final_baseline_ergotropy(),
            final_energy: r.battery_energy.last().copied().unwrap_or(0.0),
            final_baseline_energy: r.baseline_energy.last().copied().unwrap_or(0.0),
            alpha_e: r.alpha_e,
            alpha_w: r.alpha_w,
            final_fidelity: r.final_fidelity,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OptimizationSummary {
    pub iterations: usize,
    pub stop_reason: &'static str,
    pub final_j: f64,
    pub final_j_tau: f64,
    /// Iterations at which `J` increased; recorded, not fatal.
    pub monotonicity_violations: Vec<usize>,
}

pub fn stop_reason_name(s: &StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
        StopReason::Requested => "target_reached",
    }
}

impl From<&OptimizationResult> for OptimizationSummary {
    fn from(o: &OptimizationResult) -> Self {
        let last = o.last();
        Self {
            iterations: last.iteration,
            stop_reason: stop_reason_name(&o.stop),
            final_j: last.j,
            final_j_tau: last.j_tau,
            monotonicity_violations: o.monotonicity_violations.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport<'a> {
    pub config: &'a ExperimentConfig,
    pub report: ReportSummary,
    pub optimization: OptimizationSummary,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| OutputError {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// The four per-run files: report.json, pulse.csv, trajectory.csv, convergence.csv.
pub fn write_run(dir: &Path, run: &RunOutcome) -> Result<(), OutputError> {
    let r = &run.report;
    write_json(
        &dir.join("report.json"),
        &RunReport {
            config: &run.config,
            report: r.into(),
            optimization: (&run.optimization).into(),
        },
    )?;
    write_csv(&dir.join("pulse.csv"), &PULSE_HEADER, pulse_rows(&r.times, &run.optimization.pulse.values, &run.baseline_field))?;
    write_csv(&dir.join("trajectory.csv"), &TRAJECTORY_HEADER, trajectory_rows(r))?;
    write_csv(&dir.join("convergence.csv"), &CONVERGENCE_HEADER, convergence_rows(&run.optimization.records))?;
    Ok(())
}
