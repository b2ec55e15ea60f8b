// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Monotonically convergent sequential pulse optimization.
//!
//! Each iteration propagates the co-state backwards under the previous
//! pulse, then sweeps forward: at step `k` the field at the midpoint
//! `t̄ = t_k + dt/2` is corrected by
//!
//! ```text
//! Δε(t̄) = S(t̄)/λ · Im Tr(σ_old(t_k) (i∂L/∂ε) ρ_new(t_k))
//! ```
//!
//! and the state is advanced one step under the corrected field. The
//! functional is `J = 1 − F + Σ λ/S(t̄) Δε² dt`, where `F = Tr(ρ_tgt ρ(τ))`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::energetics::drive_cost;
use crate::error::{invalid, Error, Result};
use crate::gaussian::{moment_field_update_trace, overlap, GaussianModel, MomentVector};
use crate::lindblad::{Direction, QubitModel, Stepper};
use crate::operators::{DensityMatrix, Operator};
use crate::pulse::{shape_unchecked, PulseProfile, ShapeConfig, TimeGrid};

/// Slack allowed before an increase of `J` is flagged.
pub const MONOTONICITY_SLACK: f64 = 1e-9;

/// A controlled system with a linear dependence on one real field.
pub trait ControlProblem {
    type State: Clone;

    fn grid(&self) -> &TimeGrid;
    fn initial_state(&self) -> Self::State;
    /// Co-state at `τ`, the target.
    fn co_state_seed(&self) -> Self::State;
    fn step_forward(&mut self, state: &mut Self::State, eps: f64, dt: f64);
    fn step_backward(&mut self, co_state: &mut Self::State, eps: f64, dt: f64);
    /// `Im Tr(σ (i∂L/∂ε) ρ)`.
    fn gradient(&self, co_state: &Self::State, state: &Self::State) -> Result<f64>;
    /// `⟨σ, ρ⟩ = Re Tr(σ†ρ)`, conserved along a forward/backward pair.
    fn pairing(&self, co_state: &Self::State, state: &Self::State) -> Result<f64>;
    /// `Tr(ρ_tgt ρ)`.
    fn fidelity(&self, state: &Self::State) -> Result<f64> {
        self.pairing(&self.co_state_seed(), state)
    }

    /// `(1/dt) ∂/∂ε ⟨σ_{k+1}, P(ε) ρ_k⟩` for the one-step map `P`.
    ///
    /// This is the discrete counterpart of [`ControlProblem::gradient`];
    /// using it keeps the sweep monotone to rounding rather than to `O(dt)`.
    /// The five-point stencil is exact for maps polynomial of degree ≤ 4 in
    /// the field, which covers an RK4 step of a linear generator.
    fn step_gradient(&mut self, co_next: &Self::State, state: &Self::State, eps: f64, dt: f64) -> Result<f64> {
        let h = STENCIL_STEP * (1.0 + eps.abs());
        let mut f = [0.0; 4];
        for (slot, m) in f.iter_mut().zip([-2.0, -1.0, 1.0, 2.0]) {
            let mut y = state.clone();
            self.step_forward(&mut y, eps + m * h, dt);
            *slot = self.pairing(co_next, &y)?;
        }
        Ok((f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h * dt))
    }
}

const STENCIL_STEP: f64 = 1e-2;

/// Qubit charger + cells, dense density matrices.
pub struct QubitProblem<'a> {
    model: &'a QubitModel,
    grid: TimeGrid,
    rho0: DensityMatrix,
    target: Operator,
    stepper: Stepper<'a>,
}

impl<'a> QubitProblem<'a> {
    pub fn new(model: &'a QubitModel, grid: TimeGrid, rho0: DensityMatrix, target: Operator) -> Result<Self> {
        for op in [&rho0, &target] {
            if op.dim() != model.dim() {
                return Err(Error::DimensionMismatch {
                    expected: model.dim(),
                    found: op.dim(),
                });
            }
        }
        Ok(Self {
            model,
            grid,
            rho0,
            target,
            stepper: Stepper::new(model.pulse_generator()),
        })
    }

    /// Ground-state start with every battery cell excited as the target.
    pub fn charging(model: &'a QubitModel, grid: TimeGrid) -> Result<Self> {
        Self::new(model, grid, model.ground_state(), model.excited_battery_target())
    }

    pub fn model(&self) -> &QubitModel {
        self.model
    }
}

impl ControlProblem for QubitProblem<'_> {
    type State = Vec<Complex64>;

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn initial_state(&self) -> Self::State {
        self.rho0.as_slice().to_vec()
    }

    fn co_state_seed(&self) -> Self::State {
        self.target.as_slice().to_vec()
    }

    fn step_forward(&mut self, state: &mut Self::State, eps: f64, dt: f64) {
        self.stepper.step_constant(Direction::Forward, state, dt, eps);
    }

    fn step_backward(&mut self, co_state: &mut Self::State, eps: f64, dt: f64) {
        self.stepper.step_constant(Direction::Backward, co_state, dt, eps);
    }

    fn gradient(&self, co_state: &Self::State, state: &Self::State) -> Result<f64> {
        // i ∂L/∂ε ρ = [∂H/∂ε, ρ]
        Ok(self.model.pulse_generator().control_gradient(0, co_state, state))
    }

    fn pairing(&self, co_state: &Self::State, state: &Self::State) -> Result<f64> {
        Ok(co_state.iter().zip(state).map(|(s, r)| (s.conj() * r).re).sum())
    }
}

/// Oscillator charger + battery in moment space.
pub struct OscillatorProblem {
    model: GaussianModel,
    grid: TimeGrid,
    psi0: MomentVector,
    target: MomentVector,
}

impl OscillatorProblem {
    pub fn new(model: GaussianModel, grid: TimeGrid, psi0: MomentVector, target: MomentVector) -> Self {
        Self {
            model,
            grid,
            psi0,
            target,
        }
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn model_mut(&mut self) -> &mut GaussianModel {
        &mut self.model
    }

    pub fn target(&self) -> &MomentVector {
        &self.target
    }
}

impl ControlProblem for OscillatorProblem {
    type State = MomentVector;

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn initial_state(&self) -> MomentVector {
        self.psi0
    }

    fn co_state_seed(&self) -> MomentVector {
        self.target
    }

    fn step_forward(&mut self, state: &mut MomentVector, eps: f64, dt: f64) {
        self.model.step_forward(state, eps, dt);
    }

    fn step_backward(&mut self, co_state: &mut MomentVector, eps: f64, dt: f64) {
        self.model.step_backward(co_state, eps, dt);
    }

    fn gradient(&self, co_state: &MomentVector, state: &MomentVector) -> Result<f64> {
        // ∂H/∂ε = −μ(a + a†)
        let s = self.model.spec();
        Ok(-moment_field_update_trace(co_state, state, s.mu, s.omega)?)
    }

    fn pairing(&self, co_state: &MomentVector, state: &MomentVector) -> Result<f64> {
        overlap(co_state, state)
    }
}

/// `F = Re Tr(ρ_tgt† ρ)`.
pub fn fidelity(rho_final: &DensityMatrix, target: &Operator) -> Result<f64> {
    Ok(target.inner(rho_final)?.re)
}

/// `J = J_τ + Σ_k λ/S(t̄_k) Δε_k² dt`; steps with `Δε = 0` contribute nothing.
pub fn functional(j_tau: f64, delta: &[f64], grid: &TimeGrid, cfg: &ShapeConfig) -> Result<f64> {
    if delta.len() != grid.n_steps() {
        return Err(invalid("one field change per time step is required"));
    }
    let tau = grid.tau();
    let mut running = 0.0;
    for (k, &d) in delta.iter().enumerate() {
        if d != 0.0 {
            running += cfg.lambda / shape_unchecked(grid.half_time(k), cfg, tau) * d * d;
        }
    }
    Ok(j_tau + running * grid.dt())
}

/// `Δε = S/λ · Im Tr(σ (i∂L/∂ε) ρ)` from a precomputed trace.
pub fn field_update(gradient: f64, shape: f64, lambda: f64) -> f64 {
    if shape == 0.0 {
        0.0
    } else {
        shape / lambda * gradient
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopCriteria {
    pub max_iters: usize,
    pub delta_j_tol: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_iters: 500,
            delta_j_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizationRecord {
    pub iteration: usize,
    pub j: f64,
    pub j_tau: f64,
    pub fidelity: f64,
    pub pulse_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// A caller-supplied condition ended the run.
    Requested,
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: PulseProfile,
    pub records: Vec<OptimizationRecord>,
    /// Iterations at which `J` rose by more than [`MONOTONICITY_SLACK`].
    pub monotonicity_violations: Vec<usize>,
    pub stop: StopReason,
}

impl OptimizationResult {
    pub fn last(&self) -> &OptimizationRecord {
        self.records.last().expect("at least the initial record exists")
    }
}

fn forward_fidelity<P: ControlProblem>(problem: &mut P, pulse: &PulseProfile) -> Result<f64> {
    let dt = problem.grid().dt();
    let mut rho = problem.initial_state();
    for &eps in &pulse.half_values {
        problem.step_forward(&mut rho, eps, dt);
    }
    problem.fidelity(&rho)
}

/// Runs the optimizer from `guess` until convergence or `stop.max_iters`.
pub fn optimize<P: ControlProblem>(problem: &mut P, guess: &PulseProfile, cfg: &ShapeConfig, stop: &StopCriteria) -> Result<OptimizationResult> {
    optimize_until(problem, guess, cfg, stop, |_| false)
}

/// As [`optimize`], additionally stopping once `halt(record)` returns true.
pub fn optimize_until<P, H>(problem: &mut P, guess: &PulseProfile, cfg: &ShapeConfig, stop: &StopCriteria, mut halt: H) -> Result<OptimizationResult>
where
    P: ControlProblem,
    H: FnMut(&OptimizationRecord) -> bool,
{
    let grid = *problem.grid();
    guess.check_grid(&grid)?;
    cfg.validate(grid.tau())?;
    let (n, dt, tau) = (grid.n_steps(), grid.dt(), grid.tau());
    let shape_half: Vec<f64> = (0..n).map(|k| shape_unchecked(grid.half_time(k), cfg, tau)).collect();
    let shape_grid: Vec<f64> = (0..grid.len()).map(|k| shape_unchecked(grid.time(k), cfg, tau)).collect();

    let mut pulse = guess.clone();
    let f0 = forward_fidelity(problem, &pulse)?;
    let mut records = alloc::vec![OptimizationRecord {
        iteration: 0,
        j: 1.0 - f0,
        j_tau: 1.0 - f0,
        fidelity: f0,
        pulse_cost: drive_cost(&pulse),
    }];
    let mut violations = Vec::new();
    let mut reason = StopReason::MaxIterations;
    if records[0].j <= stop.delta_j_tol {
        reason = StopReason::Converged;
    } else if halt(&records[0]) {
        reason = StopReason::Requested;
    }

    let mut co_states = alloc::vec![problem.co_state_seed(); grid.len()];
    for iteration in 1..=stop.max_iters {
        if reason != StopReason::MaxIterations {
            break;
        }
        let mut co = problem.co_state_seed();
        co_states[n] = co.clone();
        for k in (0..n).rev() {
            problem.step_backward(&mut co, pulse.half_values[k], dt);
            co_states[k] = co.clone();
        }

        let mut rho = problem.initial_state();
        let mut running = 0.0;
        for k in 0..n {
            let g = problem.step_gradient(&co_states[k + 1], &rho, pulse.half_values[k], dt)?;
            if !g.is_finite() {
                return Err(Error::NumericalPhysicality {
                    quantity: "field gradient",
                    value: g,
                });
            }
            let d = field_update(g, shape_half[k], cfg.lambda);
            if d != 0.0 {
                running += cfg.lambda / shape_half[k] * d * d * dt;
            }
            pulse.half_values[k] += d;
            pulse.values[k + 1] += field_update(g, shape_grid[k + 1], cfg.lambda);
            problem.step_forward(&mut rho, pulse.half_values[k], dt);
        }
        let f = problem.fidelity(&rho)?;
        if !f.is_finite() {
            return Err(Error::NumericalPhysicality {
                quantity: "fidelity",
                value: f,
            });
        }
        let rec = OptimizationRecord {
            iteration,
            j: 1.0 - f + running,
            j_tau: 1.0 - f,
            fidelity: f,
            pulse_cost: drive_cost(&pulse),
        };
        let prev = records.last().expect("non-empty").j;
        if rec.j > prev + MONOTONICITY_SLACK {
            violations.push(iteration);
        }
        records.push(rec);
        // J⁽¹⁾ ≈ J_τ⁽⁰⁾ = J⁽⁰⁾ holds by construction, so the first
        // difference says nothing about convergence.
        if iteration > 1 && (rec.j - prev).abs() < stop.delta_j_tol {
            reason = StopReason::Converged;
        } else if halt(&rec) {
            reason = StopReason::Requested;
        }
    }
    Ok(OptimizationResult {
        pulse,
        records,
        monotonicity_violations: violations,
        stop: reason,
    })
}

/// `g_k` for every step under a fixed pulse, so that `∂F/∂ε_k = g_k·dt`,
/// where `ε_k` is the half-grid field of step `k`.
///
/// The field update of the sweep is `S(t̄_k)/λ · g_k` at the first step it
/// reaches with an unchanged state.
pub fn gradient_profile<P: ControlProblem>(problem: &mut P, pulse: &PulseProfile) -> Result<Vec<f64>> {
    let grid = *problem.grid();
    pulse.check_grid(&grid)?;
    let (n, dt) = (grid.n_steps(), grid.dt());
    let mut co_states = alloc::vec![problem.co_state_seed(); grid.len()];
    let mut co = problem.co_state_seed();
    for k in (0..n).rev() {
        problem.step_backward(&mut co, pulse.half_values[k], dt);
        co_states[k] = co.clone();
    }
    let mut rho = problem.initial_state();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        out.push(problem.step_gradient(&co_states[k + 1], &rho, pulse.half_values[k], dt)?);
        problem.step_forward(&mut rho, pulse.half_values[k], dt);
    }
    Ok(out)
}

/// Final fidelity of `pulse`.
pub fn evaluate_fidelity<P: ControlProblem>(problem: &mut P, pulse: &PulseProfile) -> Result<f64> {
    pulse.check_grid(problem.grid())?;
    forward_fidelity(problem, pulse)
}

/// One point of a fidelity/cost Pareto scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParetoRecord {
    pub lambda: f64,
    pub step: usize,
    pub fidelity: f64,
    pub cost: f64,
    pub j: f64,
}

impl ParetoRecord {
    pub fn from_result(lambda: f64, result: &OptimizationResult) -> Vec<ParetoRecord> {
        result
            .records
            .iter()
            .map(|r| ParetoRecord {
                lambda,
                step: r.iteration,
                fidelity: r.fidelity,
                cost: r.pulse_cost,
                j: r.j,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolBudget {
    /// Stage one runs to convergence under these criteria.
    pub benchmark: StopCriteria,
    /// Iteration cap for the high-λ stage.
    pub max_iters_high: usize,
    /// Stage two stops once `F ≥ F* − fidelity_tol`.
    pub fidelity_tol: f64,
}

#[derive(Debug, Clone)]
pub struct LambdaProtocolResult {
    pub benchmark: OptimizationResult,
    pub refined: OptimizationResult,
    /// Saturation fidelity `F*` of stage one.
    pub benchmark_fidelity: f64,
    /// Whether stage two came within tolerance of `F*`.
    pub reached: bool,
    pub pareto: Vec<ParetoRecord>,
}

impl LambdaProtocolResult {
    pub fn pulse(&self) -> &PulseProfile {
        &self.refined.pulse
    }
}

/// Low-λ run to find the attainable fidelity, then a high-λ run that stops
/// as soon as it gets there.
pub fn lambda_protocol<P: ControlProblem>(
    problem: &mut P,
    guess: &PulseProfile,
    cfg: &ShapeConfig,
    lambda_low: f64,
    lambda_high: f64,
    budget: &ProtocolBudget,
) -> Result<LambdaProtocolResult> {
    if !(lambda_low > 0.0 && lambda_low <= lambda_high) {
        return Err(invalid("lambda_protocol requires 0 < lambda_low ≤ lambda_high"));
    }
    let low = ShapeConfig { lambda: lambda_low, ..*cfg };
    let benchmark = optimize(problem, guess, &low, &budget.benchmark)?;
    let f_star = benchmark.last().fidelity;
    let mut pareto = ParetoRecord::from_result(lambda_low, &benchmark);
    if lambda_low == lambda_high {
        return Ok(LambdaProtocolResult {
            refined: benchmark.clone(),
            benchmark,
            benchmark_fidelity: f_star,
            reached: true,
            pareto,
        });
    }
    let high = ShapeConfig { lambda: lambda_high, ..*cfg };
    let stop = StopCriteria {
        max_iters: budget.max_iters_high,
        delta_j_tol: budget.benchmark.delta_j_tol,
    };
    let target = f_star - budget.fidelity_tol;
    let refined = optimize_until(problem, guess, &high, &stop, |r| r.fidelity >= target)?;
    let reached = refined.last().fidelity >= target;
    pareto.extend(ParetoRecord::from_result(lambda_high, &refined));
    Ok(LambdaProtocolResult {
        benchmark,
        refined,
        benchmark_fidelity: f_star,
        reached,
        pareto,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::QubitSystemSpec;

    fn reference_spec(cells: usize) -> QubitSystemSpec {
        QubitSystemSpec {
            omega: 1.0,
            g: 0.2,
            gamma: 0.05,
            mu: 0.5,
            n_bath: 0.0,
            cells,
        }
    }

    #[test]
    fn functional_terms() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let cfg = ShapeConfig::with_fractions(1.0, 0.1, 0.1, 0.0, 2.0).unwrap();
        let zero = [0.0; 10];
        assert_eq!(functional(0.3, &zero, &grid, &cfg).unwrap(), 0.3);
        assert_eq!(functional(0.0, &zero, &grid, &cfg).unwrap(), 0.0);
        let mut d = [0.0; 10];
        d[5] = 0.1;
        let a = functional(0.0, &d, &grid, &cfg).unwrap();
        let cfg2 = ShapeConfig { lambda: 4.0, ..cfg };
        assert!((functional(0.0, &d, &grid, &cfg2).unwrap() - 2.0 * a).abs() < 1e-15);
    }

    #[test]
    fn pinned_update() {
        assert_eq!(field_update(3.0, 0.0, 1.0), 0.0);
        assert_eq!(field_update(3.0, 0.5, 2.0), 0.75);
    }

    #[test]
    fn qubit_fidelity_cases() {
        let model = QubitModel::new(reference_spec(1)).unwrap();
        let tgt = model.excited_battery_target();
        assert_eq!(fidelity(&Operator::basis_projector(4, 0), &tgt).unwrap(), 0.0);
        assert_eq!(fidelity(&Operator::basis_projector(4, 1), &tgt).unwrap(), 1.0);
        let p = Operator::basis_projector(4, 2);
        assert_eq!(fidelity(&p, &p).unwrap(), 1.0);
    }

    #[test]
    fn target_equal_to_start_needs_no_pulse() {
        let model = QubitModel::new(reference_spec(1)).unwrap();
        let grid = TimeGrid::new(5.0, 200).unwrap();
        let mut problem = QubitProblem::new(&model, grid, model.ground_state(), model.ground_state()).unwrap();
        let cfg = ShapeConfig::with_fractions(5.0, 0.005, 0.005, 0.0, 1.0).unwrap();
        let guess = PulseProfile::initial_guess(grid, &cfg);
        let res = optimize(&mut problem, &guess, &cfg, &StopCriteria::default()).unwrap();
        assert_eq!(res.records.len(), 1);
        assert_eq!(res.stop, StopReason::Converged);
        assert!(res.last().j.abs() < 1e-12);
        assert_eq!(res.pulse.max_abs(), 0.0);
    }

    #[test]
    fn short_run_is_monotone_and_pinned() {
        let model = QubitModel::new(reference_spec(1)).unwrap();
        let tau = core::f64::consts::PI / 0.2;
        let grid = TimeGrid::new(tau, 800).unwrap();
        let cfg = ShapeConfig::with_fractions(tau, 0.005, 0.005, 0.5, 5.0).unwrap();
        let mut problem = QubitProblem::charging(&model, grid).unwrap();
        let guess = PulseProfile::initial_guess(grid, &cfg);
        let stop = StopCriteria {
            max_iters: 5,
            delta_j_tol: 0.0,
        };
        let res = optimize(&mut problem, &guess, &cfg, &stop).unwrap();
        assert_eq!(res.records.len(), 6);
        assert!(res.monotonicity_violations.is_empty());
        assert!(res.last().fidelity > res.records[0].fidelity);
        let m = res.pulse.max_abs();
        assert!(res.pulse.values[0].abs() <= 1e-6 * m);
        assert!(res.pulse.values[grid.n_steps()].abs() <= 1e-6 * m);
    }

    #[test]
    fn gradient_profile_matches_central_differences() {
        let model = QubitModel::new(reference_spec(1)).unwrap();
        let grid = TimeGrid::new(3.0, 60).unwrap();
        let pulse = PulseProfile::from_fn(grid, |t| 0.8 * (1.3 * t).sin());
        let mut problem = QubitProblem::charging(&model, grid).unwrap();
        let g = gradient_profile(&mut problem, &pulse).unwrap();
        let h = 1e-5;
        for k in [5, 30, 55] {
            let mut plus = pulse.clone();
            plus.half_values[k] += h;
            let mut minus = pulse.clone();
            minus.half_values[k] -= h;
            let fd = (evaluate_fidelity(&mut problem, &plus).unwrap() - evaluate_fidelity(&mut problem, &minus).unwrap()) / (2.0 * h);
            assert!((fd - g[k] * grid.dt()).abs() < 1e-9 * (1.0 + fd.abs()), "k={k}: {fd} vs {}", g[k] * grid.dt());
        }
    }

    #[test]
    fn protocol_rejects_inverted_lambdas() {
        let model = QubitModel::new(reference_spec(1)).unwrap();
        let grid = TimeGrid::new(2.0, 50).unwrap();
        let cfg = ShapeConfig::with_fractions(2.0, 0.005, 0.005, 0.5, 1.0).unwrap();
        let mut problem = QubitProblem::charging(&model, grid).unwrap();
        let guess = PulseProfile::initial_guess(grid, &cfg);
        let budget = ProtocolBudget {
            benchmark: StopCriteria::default(),
            max_iters_high: 10,
            fidelity_tol: 1e-3,
        };
        assert!(lambda_protocol(&mut problem, &guess, &cfg, 2.0, 1.0, &budget).is_err());
    }
}
