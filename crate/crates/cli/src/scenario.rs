// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Executes one configured charging scenario end to end.

use chargeopt_core::energetics::{oscillator_charging_report, qubit_charging_report, ChargingReport};
use chargeopt_core::gaussian::{GaussianModel, MomentVector};
use chargeopt_core::krotov::{lambda_protocol, optimize, LambdaProtocolResult, OptimizationResult, OscillatorProblem, QubitProblem};
use chargeopt_core::lindblad::QubitModel;
use chargeopt_core::{PulseProfile, Result, TimeGrid};

use crate::config::{ExperimentConfig, ModelKind};

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub optimization: OptimizationResult,
    pub report: ChargingReport,
    /// The baseline drive as a scalar field, `(2F/μ)cos(ωt)` on the grid.
    pub baseline_field: Vec<f64>,
}

fn baseline_field(cfg: &ExperimentConfig, grid: &TimeGrid) -> Vec<f64> {
    let s = &cfg.system;
    let amp = 2.0 * cfg.baseline_amplitude / s.mu;
    grid.times().into_iter().map(|t| amp * (s.omega * t).cos()).collect()
}

#[allow(clippy::large_enum_variant)] // built once per run
enum Prepared {
    Qubit(QubitModel),
    Oscillator(GaussianModel),
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    Ok(match cfg.model {
        ModelKind::Qubit => Prepared::Qubit(QubitModel::new(cfg.qubit_spec())?),
        ModelKind::Oscillator => Prepared::Oscillator(GaussianModel::new(cfg.oscillator_spec())?),
    })
}

fn oscillator_problem(cfg: &ExperimentConfig, model: GaussianModel) -> Result<OscillatorProblem> {
    let omega = cfg.system.omega;
    Ok(OscillatorProblem::new(
        model,
        cfg.time_grid()?,
        MomentVector::vacuum(omega),
        MomentVector::coherent_battery(omega, cfg.target_alpha()),
    ))
}

/// Charging report for an arbitrary pulse under `cfg`'s system and baseline.
pub fn evaluate(cfg: &ExperimentConfig, pulse: &PulseProfile, final_fidelity: f64) -> Result<ChargingReport> {
    let grid = cfg.time_grid()?;
    match prepare(cfg)? {
        Prepared::Qubit(model) => qubit_charging_report(&model, &grid, pulse, cfg.baseline_amplitude, final_fidelity),
        Prepared::Oscillator(mut model) => oscillator_charging_report(&mut model, &grid, pulse, cfg.baseline_amplitude, final_fidelity),
    }
}

/// Optimizes from the configured initial guess and evaluates the result.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    let grid = cfg.time_grid()?;
    let shape = cfg.shape_config()?;
    let guess = PulseProfile::initial_guess(grid, &shape);
    let stop = cfg.stop_criteria();
    let optimization = match prepare(cfg)? {
        Prepared::Qubit(model) => {
            let mut problem = QubitProblem::charging(&model, grid)?;
            optimize(&mut problem, &guess, &shape, &stop)?
        }
        Prepared::Oscillator(model) => {
            let mut problem = oscillator_problem(cfg, model)?;
            optimize(&mut problem, &guess, &shape, &stop)?
        }
    };
    let report = evaluate(cfg, &optimization.pulse, optimization.last().fidelity)?;
    Ok(RunOutcome {
        config: cfg.clone(),
        optimization,
        report,
        baseline_field: baseline_field(cfg, &grid),
    })
}

/// Two-stage λ protocol on `cfg`'s problem.
pub fn run_protocol(cfg: &ExperimentConfig, lambda_low: f64, lambda_high: f64) -> Result<LambdaProtocolResult> {
    let grid = cfg.time_grid()?;
    let shape = cfg.shape_config()?;
    let guess = PulseProfile::initial_guess(grid, &shape);
    let budget = cfg.protocol_budget();
    match prepare(cfg)? {
        Prepared::Qubit(model) => {
            let mut problem = QubitProblem::charging(&model, grid)?;
            lambda_protocol(&mut problem, &guess, &shape, lambda_low, lambda_high, &budget)
        }
        Prepared::Oscillator(model) => {
            let mut problem = oscillator_problem(cfg, model)?;
            lambda_protocol(&mut problem, &guess, &shape, lambda_low, lambda_high, &budget)
        }
    }
}
