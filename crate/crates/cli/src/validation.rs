// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Oracle suites: each check compares a production path against an
//! independent computation and reports pass/fail with the observed error.

use std::f64::consts::PI;

use chargeopt_core::energetics::{energy, ergotropy};
use chargeopt_core::gaussian::{
    battery_energy, build_backward_generator, build_forward_generator, difference_matrix, gaussian_ergotropy, moment_field_update_trace,
    FockOracle, GaussianModel, GaussianPrep, MomentVector, OscillatorDrive, OscillatorSystemSpec, C, MOMENT_LEN, V11,
};
use chargeopt_core::krotov::{evaluate_fidelity, field_update, gradient_profile, ControlProblem, QubitProblem};
use chargeopt_core::linalg::hermitian_eigen;
use chargeopt_core::lindblad::{QubitModel, QubitSystemSpec};
use chargeopt_core::operators::{pauli, Operator, PauliKind};
use chargeopt_core::pulse::shape;
use chargeopt_core::{Error, PulseProfile, ShapeConfig, TimeGrid};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn error(name: &str, e: Error) -> Self {
        Self::new(name, false, format!("error: {e}"))
    }
}

/// The oscillator parameters of the reference charging problem.
pub fn reference_oscillator(n_bath: f64) -> OscillatorSystemSpec {
    OscillatorSystemSpec {
        omega: 1.0,
        g: 0.2,
        gamma: 0.01,
        mu: 0.1,
        n_bath,
    }
}

/// `A_f − A_b` must equal the dissipative shift `M` (plus `γ` on the trace
/// entry). `corrupt` perturbs one `A_b` entry as a negative control.
pub fn check_generator_shift(spec: &OscillatorSystemSpec, corrupt: bool) -> CheckOutcome {
    const NAME: &str = "moment generators: A_f - A_b = M";
    let mut worst: f64 = 0.0;
    for eps in [0.0, 0.7, -1.9] {
        let af = build_forward_generator(spec, eps).entries;
        let mut ab = build_backward_generator(spec, eps).entries;
        if corrupt {
            ab[V11][C] += 1e-3;
        }
        let m = difference_matrix(spec);
        for i in 0..MOMENT_LEN {
            for j in 0..MOMENT_LEN {
                let want = if (i, j) == (C, C) { spec.gamma } else { m[i][j] };
                worst = worst.max((af[i][j] - ab[i][j] - want).abs());
            }
        }
    }
    CheckOutcome::new(NAME, worst < 1e-14, format!("max entry error {worst:.3e} (tol 1e-14)"))
}

/// Maximum moment deviation between the moment solver and a truncated Fock
/// solution, over every grid point and both the `2cos(ωt)` pulse and the
/// resonant baseline.
pub fn gaussian_fock_deviation(spec: &OscillatorSystemSpec, truncation: usize, grid: &TimeGrid, amplitude: f64) -> Result<f64, Error> {
    let oracle = FockOracle::new(*spec, truncation)?;
    let mut model = GaussianModel::new(*spec)?;
    let omega = spec.omega;
    let pulse = PulseProfile::from_fn(*grid, |t| 2.0 * (omega * t).cos());
    let psi0 = MomentVector::vacuum(omega);
    let mut worst: f64 = 0.0;
    for drive in [OscillatorDrive::Pulse(&pulse), OscillatorDrive::Oscillatory { amplitude }] {
        let fock = oracle.propagate_moments(drive, &oracle.vacuum(), grid)?;
        let moments = model.propagate_forward(drive, &psi0, grid)?;
        for (f, m) in fock.iter().zip(&moments) {
            worst = worst.max(f.max_abs_diff(m));
        }
    }
    Ok(worst)
}

pub fn check_gaussian_vs_fock(spec: &OscillatorSystemSpec, truncation: usize, grid: &TimeGrid, amplitude: f64, tol: f64) -> CheckOutcome {
    let name = format!("moments vs Fock truncation {truncation}");
    match gaussian_fock_deviation(spec, truncation, grid, amplitude) {
        Ok(d) => CheckOutcome::new(&name, d < tol, format!("max moment deviation {d:.3e} (tol {tol:.0e})")),
        Err(e) => CheckOutcome::error(&name, e),
    }
}

fn random_prep(rng: &mut ChaCha8Rng) -> GaussianPrep {
    let mut c = |scale: f64| Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
    let squeeze = [c(0.12), c(0.12)];
    let two_mode = c(0.1);
    let beam_splitter = c(0.5);
    let displacement = [c(0.7), c(0.7)];
    GaussianPrep {
        squeeze,
        two_mode,
        beam_splitter,
        displacement,
        occupation: [rng.gen_range(0.0..0.12), rng.gen_range(0.0..0.12)],
        steps: 60,
    }
}

/// Closed-form field trace against the Fock-space commutator on seeded
/// random Gaussian pairs. Returns the largest absolute deviation.
pub fn field_trace_deviation(spec: &OscillatorSystemSpec, truncation: usize, pairs: usize, seed: u64) -> Result<f64, Error> {
    let oracle = FockOracle::new(*spec, truncation)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let sigma = oracle.prepare_gaussian(&random_prep(&mut rng))?;
        let rho = oracle.prepare_gaussian(&random_prep(&mut rng))?;
        let exact = oracle.ensemble_field_trace(&sigma, &rho);
        let closed = moment_field_update_trace(&oracle.ensemble_moments(&sigma), &oracle.ensemble_moments(&rho), spec.mu, spec.omega)?;
        worst = worst.max((exact - closed).abs());
    }
    Ok(worst)
}

pub fn check_field_trace(spec: &OscillatorSystemSpec, truncation: usize, pairs: usize, seed: u64, tol: f64) -> CheckOutcome {
    let name = format!("field-update trace vs Fock ({pairs} random pairs)");
    match field_trace_deviation(spec, truncation, pairs, seed) {
        Ok(d) => CheckOutcome::new(&name, d < tol, format!("max deviation {d:.3e} (tol {tol:.0e})")),
        Err(e) => CheckOutcome::error(&name, e),
    }
}

/// Result of comparing the field update with finite differences of `J`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheck {
    /// Largest relative deviation of the update direction from `−∂J/∂ε`.
    pub worst_relative: f64,
    /// Same, for the continuous-time trace evaluated at `t_k`.
    pub worst_relative_continuous: f64,
    pub sign_agreement: bool,
    pub samples: usize,
}

/// Random small qubit problems; at a few well-conditioned steps per instance
/// the update `Δε_k = S/λ·g_k` is compared with central differences of
/// `J = 1 − F` with respect to the half-grid field.
pub fn gradient_finite_differences(instances: usize, seed: u64) -> Result<GradientCheck, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = GradientCheck {
        worst_relative: 0.0,
        worst_relative_continuous: 0.0,
        sign_agreement: true,
        samples: 0,
    };
    for _ in 0..instances {
        let spec = QubitSystemSpec {
            omega: 1.0,
            g: rng.gen_range(0.1..0.4),
            gamma: rng.gen_range(0.0..0.1),
            mu: rng.gen_range(0.2..0.8),
            n_bath: rng.gen_range(0.0..1.0),
            cells: 1,
        };
        let model = QubitModel::new(spec)?;
        let tau = rng.gen_range(2.0..5.0);
        let grid = TimeGrid::new(tau, 400)?;
        let lambda = rng.gen_range(0.5..5.0);
        let cfg = ShapeConfig::with_fractions(tau, 0.05, 0.05, 0.0, lambda)?;
        let (a1, a2, w1, w2) = (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(0.5..1.5), rng.gen_range(0.5..1.5));
        let pulse = PulseProfile::from_fn(grid, |t| a1 * (w1 * t).cos() + a2 * (w2 * t).sin());
        let mut problem = QubitProblem::charging(&model, grid)?;
        let g = gradient_profile(&mut problem, &pulse)?;
        let g_cont = continuous_traces(&model, &grid, &pulse)?;
        let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let candidates: Vec<usize> = (1..grid.n_steps() - 1).filter(|&k| g[k].abs() >= 0.2 * gmax).collect();
        for _ in 0..3 {
            let k = candidates[rng.gen_range(0..candidates.len())];
            let s = shape(grid.half_time(k), &cfg, tau)?;
            let update = field_update(g[k], s, lambda);
            let h = 1e-4;
            let mut plus = pulse.clone();
            plus.half_values[k] += h;
            let mut minus = pulse.clone();
            minus.half_values[k] -= h;
            let j_plus = 1.0 - evaluate_fidelity(&mut problem, &plus)?;
            let j_minus = 1.0 - evaluate_fidelity(&mut problem, &minus)?;
            // steepest-descent direction for J, scaled like the update
            let descent = -(j_plus - j_minus) / (2.0 * h) / grid.dt() * s / lambda;
            let continuous = field_update(g_cont[k], s, lambda);
            out.worst_relative = out.worst_relative.max(((update - descent) / descent).abs());
            out.worst_relative_continuous = out.worst_relative_continuous.max(((continuous - descent) / descent).abs());
            out.sign_agreement &= update.signum() == descent.signum();
            out.samples += 1;
        }
    }
    Ok(out)
}

fn continuous_traces(model: &QubitModel, grid: &TimeGrid, pulse: &PulseProfile) -> Result<Vec<f64>, Error> {
    let fwd = model.propagate_forward(pulse, &model.ground_state(), grid)?;
    let bwd = model.propagate_backward(pulse, &model.excited_battery_target(), grid)?;
    let problem = QubitProblem::charging(model, *grid)?;
    (0..grid.n_steps())
        .map(|k| problem.gradient(&bwd.states[k].as_slice().to_vec(), &fwd.states[k].as_slice().to_vec()))
        .collect()
}

pub fn check_gradient(instances: usize, seed: u64, tol: f64) -> CheckOutcome {
    let name = format!("field update vs finite differences ({instances} qubit instances)");
    match gradient_finite_differences(instances, seed) {
        Ok(r) => CheckOutcome::new(
            &name,
            r.sign_agreement && r.worst_relative < tol,
            format!(
                "{} samples, worst relative error {:.3e} (tol {tol}); continuous-time trace {:.3e}; signs {}",
                r.samples,
                r.worst_relative,
                r.worst_relative_continuous,
                if r.sign_agreement { "agree" } else { "DISAGREE" }
            ),
        ),
        Err(e) => CheckOutcome::error(&name, e),
    }
}

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Operator {
    let mut h = Operator::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)));
    h.hermitize();
    h
}

fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let g = Operator::from_fn(dim, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut rho = g.matmul(&g.dagger()).expect("square");
    let tr = rho.trace().re;
    rho = rho.scale(Complex64::new(1.0 / tr, 0.0));
    rho.hermitize();
    rho
}

/// `U = exp(iK)` for a random Hermitian generator `K`.
fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Operator {
    let k = random_hermitian(rng, dim, PI);
    let eig = hermitian_eigen(&k);
    let v = &eig.vectors;
    Operator::from_fn(dim, |i, j| {
        (0..dim)
            .map(|m| v.get(i, m) * Complex64::from_polar(1.0, eig.values[m]) * v.get(j, m).conj())
            .sum()
    })
}

/// Largest amount by which any sampled unitary extracts more work than the
/// ergotropy, and the worst error on the analytic qubit cases.
pub fn ergotropy_dominance(states: usize, unitaries: usize, seed: u64) -> Result<(f64, f64), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..states {
        let h = random_hermitian(&mut rng, 4, 1.0);
        let rho = random_density(&mut rng, 4);
        let e0 = energy(&rho, &h)?;
        let erg = ergotropy(&rho, &h)?;
        for _ in 0..unitaries {
            let u = random_unitary(&mut rng, 4);
            let moved = u.matmul(&rho)?.matmul(&u.dagger())?;
            excess = excess.max(e0 - energy(&moved, &h)? - erg);
        }
    }

    // closed forms on a qubit with H = diag(0, 1)
    let h = Operator::from_real_diagonal(&[0.0, 1.0]);
    let mut analytic: f64 = 0.0;
    for p in [0.0, 0.1, 0.5, 0.8, 1.0] {
        let rho = Operator::from_real_diagonal(&[1.0 - p, p]);
        analytic = analytic.max((ergotropy(&rho, &h)? - (2.0 * p - 1.0).max(0.0)).abs());
    }
    // |+⟩ under σ_x: energy 1 above the ground level −1
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = Operator::projector(&[Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
    analytic = analytic.max((ergotropy(&plus, &pauli(PauliKind::X))? - 2.0).abs());
    Ok((excess, analytic))
}

pub fn check_ergotropy(states: usize, unitaries: usize, seed: u64) -> CheckOutcome {
    let name = format!("ergotropy bound ({states} states x {unitaries} unitaries)");
    match ergotropy_dominance(states, unitaries, seed) {
        Ok((excess, analytic)) => CheckOutcome::new(
            &name,
            excess <= 1e-9 && analytic < 1e-12,
            format!("max excess {excess:.3e} (tol 1e-9); analytic cases {analytic:.3e} (tol 1e-12)"),
        ),
        Err(e) => CheckOutcome::error(&name, e),
    }
}

/// `⟨σ(t), ρ(t)⟩` must be constant along a forward/backward pair.
pub fn check_duality(seed: u64) -> CheckOutcome {
    const NAME: &str = "qubit forward/backward pairing conserved";
    let run = || -> Result<f64, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = QubitSystemSpec {
            omega: 1.0,
            g: 0.2,
            gamma: 0.05,
            mu: 0.5,
            n_bath: rng.gen_range(0.0..2.0),
            cells: 2,
        };
        let model = QubitModel::new(spec)?;
        let grid = TimeGrid::new(6.0, 300)?;
        let (a, w) = (rng.gen_range(0.2..1.5), rng.gen_range(0.5..1.5));
        let pulse = PulseProfile::from_fn(grid, |t| a * (w * t).sin());
        let fwd = model.propagate_forward(&pulse, &model.ground_state(), &grid)?;
        let bwd = model.propagate_backward(&pulse, &model.excited_battery_target(), &grid)?;
        let reference = bwd.states[0].inner(&fwd.states[0])?.re;
        let mut worst: f64 = 0.0;
        for (s, r) in bwd.states.iter().zip(&fwd.states) {
            worst = worst.max((s.inner(r)?.re - reference).abs());
        }
        Ok(worst)
    };
    match run() {
        Ok(d) => CheckOutcome::new(NAME, d < 1e-12, format!("max drift {d:.3e} (tol 1e-12)")),
        Err(e) => CheckOutcome::error(NAME, e),
    }
}

/// Battery ergotropy and energy at `τ` for a pulse at several bath
/// occupations, starting from the joint vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separation {
    /// `max − min` of the final ergotropy over the occupations.
    pub ergotropy_spread: f64,
    /// `max |E_{ε,T} − E_{0,T} − E_{ε,0}|` over the occupations.
    pub energy_defect: f64,
}

pub fn temperature_separation(base: &OscillatorSystemSpec, pulse: &PulseProfile, occupations: &[f64]) -> Result<Separation, Error> {
    let grid = *pulse.grid();
    let omega = base.omega;
    let zero = PulseProfile::zeros(grid);
    let psi0 = MomentVector::vacuum(omega);
    let n = grid.n_steps();
    let final_state = |n_bath: f64, p: &PulseProfile| -> Result<MomentVector, Error> {
        let mut model = GaussianModel::new(OscillatorSystemSpec { n_bath, ..*base })?;
        Ok(model.propagate_forward(OscillatorDrive::Pulse(p), &psi0, &grid)?[n])
    };
    let e_drive_cold = battery_energy(&final_state(0.0, pulse)?, omega)?;
    let mut erg = Vec::new();
    let mut defect: f64 = 0.0;
    for &nb in occupations {
        let driven = final_state(nb, pulse)?;
        let idle = final_state(nb, &zero)?;
        erg.push(gaussian_ergotropy(&driven, omega)?);
        defect = defect.max((battery_energy(&driven, omega)? - battery_energy(&idle, omega)? - e_drive_cold).abs());
    }
    let hi = erg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = erg.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Separation {
        ergotropy_spread: hi - lo,
        energy_defect: defect,
    })
}

pub fn check_separation(spec: &OscillatorSystemSpec, pulse: &PulseProfile) -> CheckOutcome {
    const NAME: &str = "oscillator temperature separation (N_b = 0, 1, 3)";
    match temperature_separation(spec, pulse, &[0.0, 1.0, 3.0]) {
        Ok(s) => CheckOutcome::new(
            NAME,
            s.ergotropy_spread < 1e-8 && s.energy_defect < 1e-8,
            format!("ergotropy spread {:.3e}, energy defect {:.3e} (tol 1e-8)", s.ergotropy_spread, s.energy_defect),
        ),
        Err(e) => CheckOutcome::error(NAME, e),
    }
}

/// A Fock truncation too small for the drive must be reported as such.
pub fn check_truncation_guard(spec: &OscillatorSystemSpec, grid: &TimeGrid, amplitude: f64) -> CheckOutcome {
    const NAME: &str = "truncation guard at 5 levels";
    match gaussian_fock_deviation(spec, 5, grid, amplitude) {
        Err(Error::TruncationTooSmall { n_trunc, population }) => CheckOutcome::new(
            NAME,
            true,
            format!("TruncationTooSmall surfaced (n_trunc {n_trunc}, top population {population:.3e})"),
        ),
        Err(e) => CheckOutcome::error(NAME, e),
        Ok(d) => CheckOutcome::new(NAME, false, format!("no error raised; silent deviation {d:.3e}")),
    }
}

/// Knobs for the `validate` verb.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Fock truncation of the moment comparison; `None` picks 30 (22 when quick).
    pub truncation: Option<usize>,
    /// Negative control: perturb one backward-generator entry.
    pub corrupt_backward: bool,
    /// Smaller sample counts, for smoke tests.
    pub quick: bool,
}

pub fn run_all(opts: &ValidateOptions) -> Result<Vec<CheckOutcome>, Error> {
    let spec = reference_oscillator(1.0);
    let tau = PI / spec.g;
    let (pairs, trace_trunc, states, unitaries, instances, steps) = if opts.quick {
        (5, 22, 5, 200, 3, 400)
    } else {
        (100, 30, 50, 10_000, 20, 1000)
    };
    let grid = TimeGrid::new(tau, steps)?;
    let truncation = opts.truncation.unwrap_or(trace_trunc);
    // the pure-state covariance guard needs the fine grid even in quick mode
    let fine = TimeGrid::new(tau, 1000)?;
    let sinusoid = PulseProfile::from_fn(fine, |t| 2.0 * t.cos());
    Ok(vec![
        check_generator_shift(&spec, opts.corrupt_backward),
        check_gaussian_vs_fock(&spec, truncation, &grid, spec.mu, 1e-6),
        check_field_trace(&spec, trace_trunc, pairs, opts.seed, 1e-6),
        check_gradient(instances, opts.seed, 0.02),
        check_ergotropy(states, unitaries, opts.seed),
        check_duality(opts.seed),
        check_separation(&spec, &sinusoid),
        check_truncation_guard(&reference_oscillator(0.0), &grid, spec.mu),
    ])
}

/// Fixed-width pass/fail table.
pub fn render_table(outcomes: &[CheckOutcome]) -> String {
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for o in outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{tag}  {:width$}  {}\n", o.name, o.detail));
    }
    s
}
