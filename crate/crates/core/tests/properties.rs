// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Property tests over randomly generated operators, states and pulses.

use chargeopt_core::energetics::{drive_cost, energy, ergotropy};
use chargeopt_core::krotov::{optimize, QubitProblem, StopCriteria};
use chargeopt_core::lindblad::{QubitModel, QubitSystemSpec};
use chargeopt_core::operators::{commutator, expectation, kron, ONE, ZERO};
use chargeopt_core::pulse::shape;
use chargeopt_core::{Operator, PulseProfile, ShapeConfig, TimeGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
}

fn matrix(dim: usize) -> impl Strategy<Value = Operator> {
    complex_entries(dim * dim).prop_map(move |v| Operator::from_vec(dim, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
}

fn hermitian(dim: usize) -> impl Strategy<Value = Operator> {
    matrix(dim).prop_map(|a| {
        let mut h = Operator::from_fn(a.dim(), |i, j| a.get(i, j) + a.get(j, i).conj());
        h.hermitize();
        h
    })
}

/// `A A† / Tr(A A†)`: a full-rank density matrix almost surely.
fn density(dim: usize) -> impl Strategy<Value = Operator> {
    matrix(dim).prop_map(|a| {
        let aa = a.matmul(&a.dagger()).unwrap();
        let tr = aa.trace().re;
        let mut rho = aa.scale(Complex64::new(1.0 / tr, 0.0));
        rho.hermitize();
        rho
    })
}

/// `exp(iK)` for Hermitian `K`, by scaling and squaring a Taylor series.
fn unitary_from(k: &Operator) -> Operator {
    let dim = k.dim();
    let scale = 2f64.powi(8);
    let x = k.scale(Complex64::new(0.0, 1.0 / scale));
    let mut term = Operator::identity(dim);
    let mut sum = Operator::identity(dim);
    for n in 1..20 {
        term = term.matmul(&x).unwrap().scale(Complex64::new(1.0 / n as f64, 0.0));
        sum = Operator::from_fn(dim, |i, j| sum.get(i, j) + term.get(i, j));
    }
    for _ in 0..8 {
        sum = sum.matmul(&sum).unwrap();
    }
    sum
}

fn conjugate(u: &Operator, rho: &Operator) -> Operator {
    u.matmul(rho).unwrap().matmul(&u.dagger()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tensor_product_is_associative(a in matrix(2), b in matrix(2), c in matrix(3)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-14);
    }

    #[test]
    fn dagger_is_an_involution(a in matrix(4)) {
        prop_assert_eq!(a.dagger().dagger(), a);
    }

    #[test]
    fn mixed_product_property(a in matrix(2), b in matrix(2), c in matrix(2), d in matrix(2)) {
        let lhs = kron(&a, &b).matmul(&kron(&c, &d)).unwrap();
        let rhs = kron(&a.matmul(&c).unwrap(), &b.matmul(&d).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-13);
    }

    #[test]
    fn hermitian_expectations_are_real(h in hermitian(4), rho in density(4)) {
        let e = expectation(&rho, &h).unwrap();
        prop_assert!(e.im.abs() < 1e-13 * (1.0 + e.re.abs()));
    }

    #[test]
    fn commutator_is_antisymmetric_and_traceless(a in matrix(3), b in matrix(3)) {
        let ab = commutator(&a, &b).unwrap();
        let ba = commutator(&b, &a).unwrap();
        prop_assert!(ab.max_abs_diff(&ba.scale(-ONE)) < 1e-14);
        prop_assert!(ab.trace().norm() < 1e-13);
    }

    #[test]
    fn ergotropy_is_bounded_by_energy_above_ground(levels in prop::collection::vec(-2.0..2.0f64, 4), k in hermitian(4), rho in density(4)) {
        let u = unitary_from(&k);
        let h = conjugate(&u, &Operator::from_real_diagonal(&levels));
        let ground = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let w = ergotropy(&rho, &h).unwrap();
        let e = energy(&rho, &h).unwrap();
        prop_assert!(w >= -1e-12, "negative ergotropy {w}");
        prop_assert!(w <= e - ground + 1e-10, "{w} above {}", e - ground);
    }

    #[test]
    fn passive_energy_is_unitarily_invariant(h in hermitian(3), rho in density(3), k in hermitian(3)) {
        let u = unitary_from(&k);
        let moved = conjugate(&u, &rho);
        let passive = |r: &Operator| energy(r, &h).unwrap() - ergotropy(r, &h).unwrap();
        prop_assert!((passive(&rho) - passive(&moved)).abs() < 1e-10);
    }

    #[test]
    fn gibbs_states_hold_no_ergotropy(levels in prop::collection::vec(-2.0..2.0f64, 4), beta in 0.0..5.0f64) {
        let h = Operator::from_real_diagonal(&levels);
        let weights: Vec<f64> = levels.iter().map(|e| (-beta * e).exp()).collect();
        let z: f64 = weights.iter().sum();
        let rho = Operator::from_real_diagonal(&weights.iter().map(|w| w / z).collect::<Vec<_>>());
        prop_assert!(ergotropy(&rho, &h).unwrap().abs() < 1e-12);
    }

    #[test]
    fn pure_state_ergotropy_is_energy_above_ground(levels in prop::collection::vec(0.0..3.0f64, 3), amps in complex_entries(3)) {
        let ket: Vec<Complex64> = amps.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        let ket: Vec<Complex64> = ket.iter().map(|z| z / norm).collect();
        let h = Operator::from_real_diagonal(&levels);
        let rho = Operator::projector(&ket);
        let ground = levels.iter().cloned().fold(f64::INFINITY, f64::min);
        let e = energy(&rho, &h).unwrap();
        prop_assert!((ergotropy(&rho, &h).unwrap() - (e - ground)).abs() < 1e-12);
    }

    #[test]
    fn envelope_is_bounded_and_pinned(tau in 1.0..50.0f64, on in 0.001..0.4f64, off in 0.001..0.4f64, x in 0.0..1.0f64) {
        let cfg = ShapeConfig::with_fractions(tau, on, off, 1.0, 1.0).unwrap();
        let s = shape(x * tau, &cfg, tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(shape(0.0, &cfg, tau).unwrap().abs() < 1e-30);
        prop_assert!(shape(tau, &cfg, tau).unwrap().abs() < 1e-30);
    }

    #[test]
    fn constant_field_cost(c in -3.0..3.0f64, tau in 0.5..20.0f64, n in 2usize..300) {
        let grid = TimeGrid::new(tau, n).unwrap();
        let cost = drive_cost(&PulseProfile::from_fn(grid, |_| c));
        prop_assert!((cost - c * c * tau).abs() < 1e-12 * (1.0 + c * c * tau));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_preserves_trace_and_hermiticity(
        amp in -2.0..2.0f64, freq in 0.1..2.0f64, gamma in 0.0..0.2f64, n_bath in 0.0..3.0f64, cells in 1usize..3,
    ) {
        let spec = QubitSystemSpec { omega: 1.0, g: 0.2, gamma, mu: 0.5, n_bath, cells };
        let model = QubitModel::new(spec).unwrap();
        let grid = TimeGrid::new(6.0, 300).unwrap();
        let pulse = PulseProfile::from_fn(grid, |t| amp * (freq * t).sin());
        let traj = model.propagate_forward(&pulse, &model.ground_state(), &grid).unwrap();
        for rho in &traj.states {
            prop_assert!((rho.trace() - ONE).norm() < 1e-10);
            prop_assert!(rho.is_hermitian(1e-12));
            for i in 0..rho.dim() {
                prop_assert!(rho.get(i, i).re > -1e-9);
            }
        }
    }

    #[test]
    fn krotov_never_increases_the_functional(kappa in 0.1..1.0f64, lambda in 1.0..10.0f64, n_bath in 0.0..2.0f64) {
        let spec = QubitSystemSpec { omega: 1.0, g: 0.2, gamma: 0.05, mu: 0.5, n_bath, cells: 1 };
        let model = QubitModel::new(spec).unwrap();
        let tau = std::f64::consts::PI / 0.2;
        let grid = TimeGrid::new(tau, 200).unwrap();
        let cfg = ShapeConfig::with_fractions(tau, 0.005, 0.005, kappa, lambda).unwrap();
        let mut problem = QubitProblem::charging(&model, grid).unwrap();
        let guess = PulseProfile::initial_guess(grid, &cfg);
        let res = optimize(&mut problem, &guess, &cfg, &StopCriteria { max_iters: 8, delta_j_tol: 0.0 }).unwrap();
        for w in res.records.windows(2) {
            prop_assert!(w[1].j <= w[0].j + 1e-9, "J rose from {} to {}", w[0].j, w[1].j);
        }
        prop_assert_eq!(res.pulse.values[0], 0.0);
        prop_assert_eq!(*res.pulse.values.last().unwrap(), 0.0);
        prop_assert!(res.last().fidelity >= res.records[0].fidelity);
    }
}

#[test]
fn trapezoid_cost_converges_at_second_order() {
    // ∫₀^τ t² dt = τ³/3 with a non-periodic integrand
    let tau = 3.0;
    let err = |n: usize| {
        let grid = TimeGrid::new(tau, n).unwrap();
        (drive_cost(&PulseProfile::from_fn(grid, |t| t)) - tau.powi(3) / 3.0).abs()
    };
    let ratios: Vec<f64> = [50, 100, 200, 400].windows(2).map(|w| err(w[0]) / err(w[1])).collect();
    for r in ratios {
        assert!((r - 4.0).abs() < 0.05, "ratio {r}");
    }
}

#[test]
fn zero_operator_commutes_with_everything() {
    let z = Operator::from_fn(3, |_, _| ZERO);
    let a = Operator::from_fn(3, |i, j| Complex64::new(i as f64, j as f64));
    assert_eq!(commutator(&z, &a).unwrap().max_abs(), 0.0);
}
