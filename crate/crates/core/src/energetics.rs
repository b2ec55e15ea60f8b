// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy bookkeeping: ergotropy, passive states, drive cost and the
//! optimized-versus-baseline quality factors.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{battery_energy, gaussian_ergotropy, GaussianModel, MomentVector, OscillatorDrive};
use crate::lindblad::{QubitModel, StateTrajectory};
use crate::linalg::hermitian_eigen;
use crate::operators::{expectation, partial_trace_first, DensityMatrix, Operator, ZERO};
use crate::pulse::{PulseProfile, TimeGrid};

/// Per-run charging summary for one optimized pulse and its sinusoidal baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingReport {
    pub times: Vec<f64>,
    pub battery_energy: Vec<f64>,
    pub battery_ergotropy: Vec<f64>,
    pub baseline_energy: Vec<f64>,
    pub baseline_ergotropy: Vec<f64>,
    pub pulse_cost: f64,
    pub baseline_cost: f64,
    /// Percent; `None` when the baseline ergotropy vanishes.
    pub alpha_e: Option<f64>,
    /// Percent; `None` when the optimized pulse is identically zero.
    pub alpha_w: Option<f64>,
    pub final_fidelity: f64,
}

impl ChargingReport {
    pub fn final_ergotropy(&self) -> f64 {
        self.battery_ergotropy.last().copied().unwrap_or(0.0)
    }

    pub fn final_baseline_ergotropy(&self) -> f64 {
        self.baseline_ergotropy.last().copied().unwrap_or(0.0)
    }
}

/// `E(ρ) = Tr(ρH)`.
pub fn energy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    Ok(expectation(rho, h)?.re)
}

fn check_pair(rho: &DensityMatrix, h: &Operator) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Spectrum of `ρ` in descending order paired against ascending energies.
fn passive_pairing(rho: &DensityMatrix, h: &Operator) -> Result<(Vec<f64>, crate::linalg::HermitianEigen)> {
    check_pair(rho, h)?;
    let mut pops = hermitian_eigen(rho).values;
    pops.reverse();
    Ok((pops, hermitian_eigen(h)))
}

/// The minimal-energy state unitarily reachable from `rho`:
/// `Σ_k r_k↓ |e_k⟩⟨e_k|` with `|e_k⟩` the eigenvectors of `h` by ascending energy.
///
/// The result is expressed in the same basis as the inputs.
pub fn passive_state(rho: &DensityMatrix, h: &Operator) -> Result<DensityMatrix> {
    let (pops, eig) = passive_pairing(rho, h)?;
    let n = h.dim();
    let vecs = &eig.vectors;
    Ok(Operator::from_fn(n, |i, j| {
        let mut acc = ZERO;
        for (k, &p) in pops.iter().enumerate() {
            acc += vecs.get(i, k) * vecs.get(j, k).conj() * p;
        }
        acc
    }))
}

/// `ℰ(ρ) = E(ρ) − E(ρ_p)`, clipped at zero against rounding.
pub fn ergotropy(rho: &DensityMatrix, h: &Operator) -> Result<f64> {
    let (pops, eig) = passive_pairing(rho, h)?;
    let passive: f64 = pops.iter().zip(&eig.values).map(|(p, e)| p * e).sum();
    Ok((energy(rho, h)? - passive).max(0.0))
}

/// `𝒲 = ∫ |ε|² dt` by the trapezoidal rule on the grid samples.
pub fn drive_cost(pulse: &PulseProfile) -> f64 {
    let dt = pulse.grid().dt();
    let v = &pulse.values;
    let interior: f64 = v[1..v.len() - 1].iter().map(|x| x * x).sum();
    let ends = 0.5 * (v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1]);
    dt * (interior + ends)
}

/// Cost of the unit-amplitude resonant drive `2cos(ωt)`: `2τ + sin(2ωτ)/ω`.
pub fn oscillatory_cost_closed_form(tau: f64, omega: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(invalid("tau must be non-negative"));
    }
    if !(omega > 0.0) {
        return Err(invalid("omega must be positive"));
    }
    Ok(2.0 * tau + libm::sin(2.0 * omega * tau) / omega)
}

/// `(α_ℰ, α_𝒲)` in percent. Both are signed.
pub fn quality_factors(erg_opt: f64, erg_osc: f64, cost_opt: f64, cost_osc: f64) -> Result<(f64, f64)> {
    if erg_osc == 0.0 {
        return Err(Error::UndefinedFactor("baseline ergotropy is zero"));
    }
    if cost_opt == 0.0 {
        return Err(Error::UndefinedFactor("optimized pulse cost is zero"));
    }
    Ok(((erg_opt / erg_osc - 1.0) * 100.0, (cost_osc / cost_opt - 1.0) * 100.0))
}

/// Bose–Einstein occupation `1/(e^θ − 1)` with `θ = ω/(k_B T)`.
///
/// `θ = +∞` stands for zero temperature and gives 0.
pub fn bath_occupation(theta: f64) -> Result<f64> {
    if theta == f64::INFINITY {
        return Ok(0.0);
    }
    if !(theta > 0.0) {
        return Err(invalid("theta must be positive"));
    }
    Ok(1.0 / libm::expm1(theta))
}

/// Inverse of [`bath_occupation`]: `θ = ln(1 + 1/N_b)`; `N_b = 0` gives `+∞`.
pub fn inverse_temperature(n_bath: f64) -> Result<f64> {
    if !(n_bath >= 0.0) {
        return Err(invalid("bath occupation must be non-negative"));
    }
    if n_bath == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(libm::log1p(1.0 / n_bath))
}

/// Battery energy and ergotropy along a qubit-model trajectory.
pub fn qubit_battery_series(model: &QubitModel, traj: &StateTrajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    let hb = model.battery_hamiltonian();
    let mut e = Vec::with_capacity(traj.states.len());
    let mut erg = Vec::with_capacity(traj.states.len());
    for rho in &traj.states {
        let rb = partial_trace_first(rho, 2)?;
        e.push(energy(&rb, &hb)?);
        erg.push(ergotropy(&rb, &hb)?);
    }
    Ok((e, erg))
}

/// Cost of the baseline field `(2F/μ)cos(ωt)`, whose rotating-wave part is
/// the resonant drive of amplitude `F`.
pub fn baseline_cost(tau: f64, omega: f64, amplitude: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid("mu must be positive"));
    }
    let r = amplitude / mu;
    Ok(r * r * oscillatory_cost_closed_form(tau, omega)?)
}

fn assemble(
    times: Vec<f64>,
    opt: (Vec<f64>, Vec<f64>),
    osc: (Vec<f64>, Vec<f64>),
    pulse_cost: f64,
    baseline_cost: f64,
    final_fidelity: f64,
) -> ChargingReport {
    let e_opt = opt.1.last().copied().unwrap_or(0.0);
    let e_osc = osc.1.last().copied().unwrap_or(0.0);
    let alpha_e = (e_osc != 0.0).then(|| (e_opt / e_osc - 1.0) * 100.0);
    let alpha_w = (pulse_cost != 0.0).then(|| (baseline_cost / pulse_cost - 1.0) * 100.0);
    ChargingReport {
        times,
        battery_energy: opt.0,
        battery_ergotropy: opt.1,
        baseline_energy: osc.0,
        baseline_ergotropy: osc.1,
        pulse_cost,
        baseline_cost,
        alpha_e,
        alpha_w,
        final_fidelity,
    }
}

/// Charges a qubit battery from the ground state with `pulse` and with the
/// resonant baseline of amplitude `amplitude`, and compares the two.
pub fn qubit_charging_report(model: &QubitModel, grid: &TimeGrid, pulse: &PulseProfile, amplitude: f64, final_fidelity: f64) -> Result<ChargingReport> {
    let rho0 = model.ground_state();
    let opt = qubit_battery_series(model, &model.propagate_forward(pulse, &rho0, grid)?)?;
    let osc = qubit_battery_series(model, &model.propagate_oscillatory(amplitude, &rho0, grid)?)?;
    let s = model.spec();
    let base = baseline_cost(grid.tau(), s.omega, amplitude, s.mu)?;
    Ok(assemble(grid.times(), opt, osc, drive_cost(pulse), base, final_fidelity))
}

fn moment_series(traj: &[MomentVector], omega: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut e = Vec::with_capacity(traj.len());
    let mut erg = Vec::with_capacity(traj.len());
    for psi in traj {
        e.push(battery_energy(psi, omega)?);
        erg.push(gaussian_ergotropy(psi, omega)?);
    }
    Ok((e, erg))
}

/// Oscillator counterpart of [`qubit_charging_report`], starting from the
/// joint vacuum.
pub fn oscillator_charging_report(model: &mut GaussianModel, grid: &TimeGrid, pulse: &PulseProfile, amplitude: f64, final_fidelity: f64) -> Result<ChargingReport> {
    let s = *model.spec();
    let psi0 = MomentVector::vacuum(s.omega);
    let opt = moment_series(&model.propagate_forward(OscillatorDrive::Pulse(pulse), &psi0, grid)?, s.omega)?;
    let osc = moment_series(&model.propagate_forward(OscillatorDrive::Oscillatory { amplitude }, &psi0, grid)?, s.omega)?;
    let base = baseline_cost(grid.tau(), s.omega, amplitude, s.mu)?;
    Ok(assemble(grid.times(), opt, osc, drive_cost(pulse), base, final_fidelity))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::TimeGrid;
    use num_complex::Complex64;

    fn qubit_h() -> Operator {
        Operator::from_real_diagonal(&[0.0, 1.0])
    }

    #[test]
    fn sorted_pairing_on_diagonal_qubit() {
        let rho = Operator::from_real_diagonal(&[0.3, 0.7]);
        let p = passive_state(&rho, &qubit_h()).unwrap();
        assert!(p.max_abs_diff(&Operator::from_real_diagonal(&[0.7, 0.3])) < 1e-14);
        assert!((ergotropy(&rho, &qubit_h()).unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn passive_inputs_are_fixed_points() {
        let ground = Operator::from_real_diagonal(&[1.0, 0.0]);
        assert!(passive_state(&ground, &qubit_h()).unwrap().max_abs_diff(&ground) < 1e-14);
        let mixed = Operator::from_real_diagonal(&[0.25; 4]);
        let h = Operator::from_real_diagonal(&[0.0, 1.0, 1.0, 2.0]);
        assert!(passive_state(&mixed, &h).unwrap().max_abs_diff(&mixed) < 1e-14);
        assert_eq!(ergotropy(&mixed, &h).unwrap(), 0.0);
    }

    #[test]
    fn excited_qubit_stores_one_quantum() {
        let excited = Operator::from_real_diagonal(&[0.0, 1.0]);
        assert!((ergotropy(&excited, &qubit_h()).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn passive_state_in_rotated_basis() {
        // H = σ_x has ground state |−⟩; a |+⟩ state carries ergotropy 2.
        let h = crate::operators::pauli(crate::operators::PauliKind::X);
        let s = core::f64::consts::FRAC_1_SQRT_2;
        let plus = [Complex64::new(s, 0.0), Complex64::new(s, 0.0)];
        let rho = Operator::projector(&plus);
        assert!((ergotropy(&rho, &h).unwrap() - 2.0).abs() < 1e-12);
        let p = passive_state(&rho, &h).unwrap();
        assert!((energy(&p, &h).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_cost() {
        let grid = TimeGrid::new(2.0, 10).unwrap();
        assert_eq!(drive_cost(&PulseProfile::zeros(grid)), 0.0);
        let ones = PulseProfile::from_fn(grid, |_| 1.0);
        assert!((drive_cost(&ones) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_cost() {
        let tau = core::f64::consts::PI / 0.2;
        assert!((oscillatory_cost_closed_form(tau, 1.0).unwrap() - 31.415_926_535_897_93).abs() < 1e-9);
        assert_eq!(oscillatory_cost_closed_form(0.0, 1.0).unwrap(), 0.0);
        assert!(oscillatory_cost_closed_form(-1.0, 1.0).is_err());
    }

    #[test]
    fn factors() {
        assert_eq!(quality_factors(1.0, 1.0, 2.0, 2.0).unwrap(), (0.0, 0.0));
        let (ae, aw) = quality_factors(2.0, 1.0, 1.0, 2.0).unwrap();
        assert!((ae - 100.0).abs() < 1e-12 && (aw - 100.0).abs() < 1e-12);
        assert!(matches!(quality_factors(1.0, 0.0, 1.0, 1.0), Err(Error::UndefinedFactor(_))));
        assert!(matches!(quality_factors(1.0, 1.0, 0.0, 1.0), Err(Error::UndefinedFactor(_))));
    }

    #[test]
    fn occupation() {
        assert_eq!(bath_occupation(f64::INFINITY).unwrap(), 0.0);
        assert!((bath_occupation(core::f64::consts::LN_2).unwrap() - 1.0).abs() < 1e-14);
        assert!(bath_occupation(0.0).is_err());
        assert!(bath_occupation(-1.0).is_err());
        let n = 3.5;
        let theta = inverse_temperature(n).unwrap();
        assert!((bath_occupation(theta).unwrap() - n).abs() < 1e-12);
    }
}
