// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-mode Gaussian dynamics of the oscillator charger/battery model.
//!
//! The state is carried by the linear moment vector
//! `ψ = (c, ⟨x₁⟩, ⟨x₂⟩, ⟨p₁⟩, ⟨p₂⟩, V₁₁, V₁₂, V₁₃, V₁₄, V₂₂, V₂₃, V₂₄, V₃₃, V₃₄, V₄₄)`
//! with `x = (a + a†)/√(2ω)`, `p = i√(ω/2)(a† − a)` and `V` the symmetrized
//! second moments. Every entry is a linear functional `Tr(O ρ)` of the
//! state, so unnormalized co-states fit the same representation: `c = Tr σ`.
//!
//! [`FockOracle`] integrates the same model in a truncated Fock basis and
//! is used to validate everything here.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lindblad::{Direction, Lindbladian, StateTrajectory, Stepper};
use crate::linalg::hermitian_eigenvalues;
use crate::ode::Rk4;
use crate::operators::{DensityMatrix, Operator, SparseOp, I, ONE, ZERO};
use crate::pulse::{PulseProfile, TimeGrid};

pub const MOMENT_LEN: usize = 15;

pub const C: usize = 0;
pub const X1: usize = 1;
pub const X2: usize = 2;
pub const P1: usize = 3;
pub const P2: usize = 4;
pub const V11: usize = 5;
pub const V12: usize = 6;
pub const V13: usize = 7;
pub const V14: usize = 8;
pub const V22: usize = 9;
pub const V23: usize = 10;
pub const V24: usize = 11;
pub const V33: usize = 12;
pub const V34: usize = 13;
pub const V44: usize = 14;

/// Slot of `V_ij` for quadrature indices `i, j ∈ 0..4` in `(x₁, x₂, p₁, p₂)` order.
pub const fn v_index(i: usize, j: usize) -> usize {
    const TABLE: [[usize; 4]; 4] = [
        [V11, V12, V13, V14],
        [V12, V22, V23, V24],
        [V13, V23, V33, V34],
        [V14, V24, V34, V44],
    ];
    TABLE[i][j]
}

pub type Matrix15 = [[f64; MOMENT_LEN]; MOMENT_LEN];

/// Physical parameters of the oscillator model (units of ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorSystemSpec {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub mu: f64,
    pub n_bath: f64,
}

impl OscillatorSystemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(invalid(alloc::format!("omega must be positive, got {}", self.omega)));
        }
        for (name, v) in [("g", self.g), ("gamma", self.gamma), ("mu", self.mu), ("n_bath", self.n_bath)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(alloc::format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Force on `p₁` per unit field: `√(2ω)·μ`.
    pub fn drive_gain(&self) -> f64 {
        libm::sqrt(2.0 * self.omega) * self.mu
    }
}

/// The 15-component moment vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentVector(pub [f64; MOMENT_LEN]);

impl MomentVector {
    /// Normalized Gaussian state from its means and covariance matrix.
    pub fn from_gaussian(mean: [f64; 4], cov: [[f64; 4]; 4]) -> Self {
        let mut v = [0.0; MOMENT_LEN];
        v[C] = 1.0;
        v[X1..=P2].copy_from_slice(&mean);
        for i in 0..4 {
            for j in i..4 {
                v[v_index(i, j)] = 0.5 * (cov[i][j] + cov[j][i]) + mean[i] * mean[j];
            }
        }
        Self(v)
    }

    /// Product of thermal states with occupations `n1`, `n2`, displaced by
    /// the coherent amplitudes `alpha1`, `alpha2`.
    pub fn displaced_thermal(omega: f64, alpha: [Complex64; 2], occupation: [f64; 2]) -> Self {
        let mut mean = [0.0; 4];
        let mut cov = [[0.0; 4]; 4];
        for mode in 0..2 {
            mean[mode] = libm::sqrt(2.0 / omega) * alpha[mode].re;
            mean[mode + 2] = libm::sqrt(2.0 * omega) * alpha[mode].im;
            let s = occupation[mode] + 0.5;
            cov[mode][mode] = s / omega;
            cov[mode + 2][mode + 2] = s * omega;
        }
        Self::from_gaussian(mean, cov)
    }

    pub fn vacuum(omega: f64) -> Self {
        Self::displaced_thermal(omega, [ZERO; 2], [0.0; 2])
    }

    /// `|0⟩_C ⊗ |α⟩_B`.
    pub fn coherent_battery(omega: f64, alpha: Complex64) -> Self {
        Self::displaced_thermal(omega, [ZERO, alpha], [0.0; 2])
    }

    pub fn c(&self) -> f64 {
        self.0[C]
    }

    /// Raw first moments `Tr(r̂ ρ)`.
    pub fn r(&self) -> [f64; 4] {
        [self.0[X1], self.0[X2], self.0[P1], self.0[P2]]
    }

    /// Raw symmetric second-moment matrix.
    pub fn second_moments(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[v_index(i, j)];
            }
        }
        m
    }

    /// `(c, mean, covariance)` of the normalized state `ρ/c`.
    pub fn normalized_parts(&self) -> Result<(f64, [f64; 4], [[f64; 4]; 4])> {
        let c = self.c();
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::NumericalPhysicality {
                quantity: "moment normalization c",
                value: c,
            });
        }
        let r = self.r();
        let mean = r.map(|x| x / c);
        let second = self.second_moments();
        let mut cov = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                cov[i][j] = second[i][j] / c - mean[i] * mean[j];
            }
        }
        Ok((c, mean, cov))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// A real 15×15 generator of `dψ/dt = A ψ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub entries: Matrix15,
    pub direction: Direction,
    pub eps: f64,
}

impl GeneratorMatrix {
    pub fn apply(&self, psi: &MomentVector) -> MomentVector {
        let mut out = [0.0; MOMENT_LEN];
        mat_vec(&self.entries, &psi.0, &mut out);
        MomentVector(out)
    }
}

fn mat_vec(m: &Matrix15, y: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(m) {
        *o = row.iter().zip(y).map(|(a, b)| a * b).sum();
    }
}

fn from_triplets(entries: &[(usize, usize, f64)]) -> Matrix15 {
    let mut m = [[0.0; MOMENT_LEN]; MOMENT_LEN];
    for &(i, j, v) in entries {
        m[i][j] += v;
    }
    m
}

/// Forward generator `A_f` for the pulse drive `−μ ε (a + a†)`.
pub fn build_forward_generator(spec: &OscillatorSystemSpec, eps: f64) -> GeneratorMatrix {
    let OscillatorSystemSpec { omega: w, g, gamma, n_bath: n, .. } = *spec;
    let f = spec.drive_gain() * eps;
    let (w2, gw, gow) = (w * w, g * w, g / w);
    let half = 0.5 * gamma;
    let nh = n + 0.5;
    #[rustfmt::skip]
    let entries = from_triplets(&[
        (X1, X1, -half), (X1, P1, 1.0), (X1, P2, gow),
        (X2, P1, gow), (X2, P2, 1.0),
        (P1, C, f), (P1, X1, -w2), (P1, X2, -gw), (P1, P1, -half),
        (P2, X1, -gw), (P2, X2, -w2),
        (V11, C, gamma * nh / w), (V11, V11, -gamma), (V11, V13, 2.0), (V11, V14, 2.0 * gow),
        (V12, V12, -half), (V12, V13, gow), (V12, V14, 1.0), (V12, V23, 1.0), (V12, V24, gow),
        (V13, X1, f), (V13, V11, -w2), (V13, V12, -gw), (V13, V13, -gamma), (V13, V33, 1.0), (V13, V34, gow),
        (V14, V11, -gw), (V14, V12, -w2), (V14, V14, -half), (V14, V34, 1.0), (V14, V44, gow),
        (V22, V23, 2.0 * gow), (V22, V24, 2.0),
        (V23, X2, f), (V23, V12, -w2), (V23, V22, -gw), (V23, V23, -half), (V23, V33, gow), (V23, V34, 1.0),
        (V24, V12, -gw), (V24, V22, -w2), (V24, V34, gow), (V24, V44, 1.0),
        (V33, C, gamma * w * nh), (V33, P1, 2.0 * f), (V33, V13, -2.0 * w2), (V33, V23, -2.0 * gw), (V33, V33, -gamma),
        (V34, P2, f), (V34, V13, -gw), (V34, V14, -w2), (V34, V23, -w2), (V34, V24, -gw), (V34, V34, -half),
        (V44, V14, -2.0 * gw), (V44, V24, -2.0 * w2),
    ]);
    GeneratorMatrix {
        entries,
        direction: Direction::Forward,
        eps,
    }
}

/// `M = A_f − A_b` restricted to the non-`c` rows: a uniform `γ` diagonal
/// shift plus the vacuum-noise terms feeding `V₁₁` and `V₃₃`.
pub fn difference_matrix(spec: &OscillatorSystemSpec) -> Matrix15 {
    let OscillatorSystemSpec { omega: w, gamma, n_bath: n, .. } = *spec;
    let mut m = [[0.0; MOMENT_LEN]; MOMENT_LEN];
    for (k, row) in m.iter_mut().enumerate().skip(1) {
        row[k] = gamma;
    }
    m[V11][C] = 2.0 * gamma * (n + 0.5) / w;
    m[V33][C] = 2.0 * gamma * w * (n + 0.5);
    m
}

/// Backward generator `A_b` of the co-state moments `Tr(O σ)` under `dσ/dt = −L†σ`.
///
/// This is `A_f − M` with one more entry: the trace itself obeys
/// `d(Tr σ)/dt = −γ Tr σ`, so `A_b[c][c] = −γ`.
pub fn build_backward_generator(spec: &OscillatorSystemSpec, eps: f64) -> GeneratorMatrix {
    let mut gen = build_forward_generator(spec, eps);
    let m = difference_matrix(spec);
    for (row, dm) in gen.entries.iter_mut().zip(&m) {
        for (a, d) in row.iter_mut().zip(dm) {
            *a -= d;
        }
    }
    gen.entries[C][C] = -spec.gamma;
    gen.direction = Direction::Backward;
    gen
}

/// Adds the contribution of linear forces `ẋ₁ += f_x`, `ṗ₁ += f_p` to `out`.
fn add_force(fx: f64, fp: f64, y: &[f64], out: &mut [f64]) {
    let c = y[C];
    out[X1] += fx * c;
    out[P1] += fp * c;
    out[V11] += 2.0 * fx * y[X1];
    out[V12] += fx * y[X2];
    out[V13] += fx * y[P1] + fp * y[X1];
    out[V14] += fx * y[P2];
    out[V23] += fp * y[X2];
    out[V33] += 2.0 * fp * y[P1];
    out[V34] += fp * y[P2];
}

/// `(f_x, f_p)` of `F(e^{−iωt}a† + e^{iωt}a) = F√(2ω)(x cos ωt − p sin ωt / ω)`.
fn oscillatory_force(omega: f64, amplitude: f64, t: f64) -> (f64, f64) {
    let k = amplitude * libm::sqrt(2.0 * omega);
    (-k * libm::sin(omega * t) / omega, -k * libm::cos(omega * t))
}

/// How the charger is driven.
#[derive(Debug, Clone, Copy)]
pub enum OscillatorDrive<'a> {
    /// `−μ ε(t)(a + a†)` with `ε` held at its midpoint value across each step.
    Pulse(&'a PulseProfile),
    /// Resonant `F(e^{−iωt}a† + e^{iωt}a)`.
    Oscillatory { amplitude: f64 },
}

impl OscillatorDrive<'_> {
    fn check(&self, grid: &TimeGrid) -> Result<()> {
        match self {
            Self::Pulse(p) => p.check_grid(grid),
            Self::Oscillatory { amplitude } if !(*amplitude >= 0.0) => Err(invalid("drive amplitude must be non-negative")),
            Self::Oscillatory { .. } => Ok(()),
        }
    }
}

/// Moment-space propagator with the static generators precomputed.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    spec: OscillatorSystemSpec,
    fwd: Matrix15,
    bwd: Matrix15,
    rk: Rk4<f64>,
}

impl GaussianModel {
    pub fn new(spec: OscillatorSystemSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            fwd: build_forward_generator(&spec, 0.0).entries,
            bwd: build_backward_generator(&spec, 0.0).entries,
            rk: Rk4::new(MOMENT_LEN),
        })
    }

    pub fn spec(&self) -> &OscillatorSystemSpec {
        &self.spec
    }

    /// One forward step `t → t + dt` under a constant pulse value.
    pub fn step_forward(&mut self, psi: &mut MomentVector, eps: f64, dt: f64) {
        let fp = self.spec.drive_gain() * eps;
        let a = &self.fwd;
        self.rk.step(&mut psi.0, 0.0, dt, |_, y, out| {
            mat_vec(a, y, out);
            add_force(0.0, fp, y, out);
        });
    }

    /// One backward step `t + dt → t` under a constant pulse value.
    pub fn step_backward(&mut self, chi: &mut MomentVector, eps: f64, dt: f64) {
        let fp = self.spec.drive_gain() * eps;
        let a = &self.bwd;
        self.rk.step(&mut chi.0, 0.0, dt, |_, y, out| {
            mat_vec(a, y, out);
            add_force(0.0, fp, y, out);
            out.iter_mut().for_each(|v| *v = -*v);
        });
    }

    pub fn propagate_forward(&mut self, drive: OscillatorDrive<'_>, psi0: &MomentVector, grid: &TimeGrid) -> Result<Vec<MomentVector>> {
        drive.check(grid)?;
        let dt = grid.dt();
        let mut psi = *psi0;
        let mut out = Vec::with_capacity(grid.len());
        out.push(psi);
        for k in 0..grid.n_steps() {
            match drive {
                OscillatorDrive::Pulse(p) => self.step_forward(&mut psi, p.half_values[k], dt),
                OscillatorDrive::Oscillatory { amplitude } => {
                    let (a, w) = (&self.fwd, self.spec.omega);
                    self.rk.step(&mut psi.0, grid.time(k), dt, |t, y, o| {
                        mat_vec(a, y, o);
                        let (fx, fp) = oscillatory_force(w, amplitude, t);
                        add_force(fx, fp, y, o);
                    });
                }
            }
            out.push(psi);
        }
        Ok(out)
    }

    /// Co-state moments seeded with `chi_tau` at `t = τ`; `out[k]` is at `t_k`.
    pub fn propagate_backward(&mut self, pulse: &PulseProfile, chi_tau: &MomentVector, grid: &TimeGrid) -> Result<Vec<MomentVector>> {
        pulse.check_grid(grid)?;
        let dt = grid.dt();
        let mut chi = *chi_tau;
        let mut out = vec![chi; grid.len()];
        for k in (0..grid.n_steps()).rev() {
            self.step_backward(&mut chi, pulse.half_values[k], dt);
            out[k] = chi;
        }
        Ok(out)
    }

}

/// `propagate_moments` for a pulse in either direction.
///
/// Forward: `psi0` is the initial state. Backward: `psi0` is the co-state at `τ`.
pub fn propagate_moments(
    spec: &OscillatorSystemSpec,
    pulse: &PulseProfile,
    psi0: &MomentVector,
    grid: &TimeGrid,
    direction: Direction,
) -> Result<Vec<MomentVector>> {
    let mut model = GaussianModel::new(*spec)?;
    match direction {
        Direction::Forward => model.propagate_forward(OscillatorDrive::Pulse(pulse), psi0, grid),
        Direction::Backward => model.propagate_backward(pulse, psi0, grid),
    }
}

/// `ω⟨b†b⟩ = ½(ω²V₂₂ + V₄₄) − ω/2` of the normalized state.
pub fn battery_energy(psi: &MomentVector, omega: f64) -> Result<f64> {
    mode_energy(psi, omega, 1)
}

/// `ω⟨n_k⟩` for mode `k` (0 charger, 1 battery).
pub fn mode_energy(psi: &MomentVector, omega: f64, mode: usize) -> Result<f64> {
    let c = psi.c();
    let e = 0.5 * (omega * omega * psi.0[v_index(mode, mode)] + psi.0[v_index(mode + 2, mode + 2)]) / c - 0.5 * omega;
    if !(e >= -1e-8) {
        return Err(Error::NumericalPhysicality {
            quantity: "mode energy",
            value: e,
        });
    }
    Ok(e.max(0.0))
}

/// Ergotropy of the battery mode: its energy above the thermal state with the
/// same symplectic eigenvalue `ν = 2√det V_c,B`.
pub fn gaussian_ergotropy(psi: &MomentVector, omega: f64) -> Result<f64> {
    let (_, _, cov) = psi.normalized_parts()?;
    let det = cov[1][1] * cov[3][3] - cov[1][3] * cov[3][1];
    if det < 0.25 - 1e-8 {
        return Err(Error::UnphysicalCovariance { det });
    }
    let nu = 2.0 * libm::sqrt(det.max(0.25));
    let e = battery_energy(psi, omega)?;
    Ok((e - 0.5 * omega * (nu - 1.0)).max(0.0))
}

/// Smallest eigenvalue of `V_c + iJ/2`; non-negative for physical states.
pub fn uncertainty_margin(psi: &MomentVector) -> Result<f64> {
    let (_, _, cov) = psi.normalized_parts()?;
    let m = Operator::from_fn(4, |i, j| {
        // J = [[0, I], [−I, 0]] in (x₁, x₂, p₁, p₂) order
        let jij = if j == i + 2 {
            1.0
        } else if i == j + 2 {
            -1.0
        } else {
            0.0
        };
        Complex64::new(cov[i][j], 0.5 * jij)
    });
    Ok(hermitian_eigenvalues(&m)[0])
}

struct Pair {
    weight: f64,
    sigma_inv_d: Vector4<f64>,
}

/// `Tr(σρ)` and `Σ⁻¹(m_ρ − m_σ)` with `Σ = V_c,σ + V_c,ρ`.
fn gaussian_pair(chi: &MomentVector, psi: &MomentVector) -> Result<Pair> {
    let (cs, ms, vs) = chi.normalized_parts()?;
    let (cr, mr, vr) = psi.normalized_parts()?;
    let sigma = Matrix4::from_fn(|i, j| vs[i][j] + vr[i][j]);
    let det = sigma.determinant();
    let inv = sigma
        .try_inverse()
        .filter(|_| det > 0.0)
        .ok_or(Error::UnphysicalCovariance { det })?;
    let d = Vector4::from_fn(|i, _| mr[i] - ms[i]);
    let sd = inv * d;
    let weight = cs * cr * libm::exp(-0.5 * d.dot(&sd)) / libm::sqrt(det);
    Ok(Pair { weight, sigma_inv_d: sd })
}

/// `Tr(σρ)` between two Gaussian operators given by their moment vectors.
pub fn overlap(chi: &MomentVector, psi: &MomentVector) -> Result<f64> {
    Ok(gaussian_pair(chi, psi)?.weight)
}

/// `Im Tr(σ [μ(a₁ + a₁†), ρ])` in closed form.
///
/// With Wigner functions, `[x₁, ρ] ↦ i∂_{p₁}W_ρ`, and the overlap integral of
/// two Gaussians gives `Im Tr(σ[x₁, ρ]) = Tr(σρ)·[Σ⁻¹(m_ρ − m_σ)]_{p₁}`.
pub fn moment_field_update_trace(chi: &MomentVector, psi: &MomentVector, mu: f64, omega: f64) -> Result<f64> {
    if mu == 0.0 {
        return Ok(0.0);
    }
    let pair = gaussian_pair(chi, psi)?;
    Ok(mu * libm::sqrt(2.0 * omega) * pair.weight * pair.sigma_inv_d[2])
}

// ---------------------------------------------------------------------------
// Truncated Fock-space oracle

/// Fock-space model with `n_trunc` levels per mode, index `n₁·n_trunc + n₂`.
#[derive(Debug, Clone)]
pub struct FockOracle {
    spec: OscillatorSystemSpec,
    n_trunc: usize,
    pulse_gen: Lindbladian,
    rwa_gen: Lindbladian,
    /// `x₁, x₂, p₁, p₂`.
    quadratures: [SparseOp; 4],
    /// Symmetrized products in moment-vector order.
    products: Vec<SparseOp>,
    a: SparseOp,
}

/// Annihilator of `mode` on the two-mode truncated space.
fn mode_annihilator(n: usize, mode: usize) -> SparseOp {
    let mut entries = Vec::new();
    for n1 in 0..n {
        for n2 in 0..n {
            let (k, lowered) = if mode == 0 { (n1, (n1.wrapping_sub(1), n2)) } else { (n2, (n1, n2.wrapping_sub(1))) };
            if k > 0 {
                let row = lowered.0 * n + lowered.1;
                entries.push((row, n1 * n + n2, Complex64::new(libm::sqrt(k as f64), 0.0)));
            }
        }
    }
    SparseOp::from_entries(n * n, entries).expect("indices are in range")
}

fn sparse_add(dim: usize, parts: &[(Complex64, &SparseOp)]) -> SparseOp {
    let mut entries = Vec::new();
    for (c, op) in parts {
        entries.extend(op.entries().iter().map(|&(i, j, v)| (i, j, *c * v)));
    }
    SparseOp::from_entries(dim, entries).expect("indices are in range")
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl FockOracle {
    pub fn new(spec: OscillatorSystemSpec, n_trunc: usize) -> Result<Self> {
        spec.validate()?;
        if n_trunc < 3 {
            return Err(Error::InvalidDimension {
                dim: n_trunc,
                reason: "Fock oracle needs at least 3 levels per mode",
            });
        }
        let dim = n_trunc * n_trunc;
        let a = mode_annihilator(n_trunc, 0);
        let b = mode_annihilator(n_trunc, 1);
        let (ad, bd) = (a.dagger(), b.dagger());
        let w = spec.omega;
        let h0 = sparse_add(
            dim,
            &[
                (re(w), &ad.matmul(&a)?),
                (re(w), &bd.matmul(&b)?),
                (re(spec.g), &a.matmul(&bd)?),
                (re(spec.g), &ad.matmul(&b)?),
            ],
        );
        let field = sparse_add(dim, &[(re(-spec.mu), &a), (re(-spec.mu), &ad)]);
        let jumps = [(spec.gamma * (spec.n_bath + 1.0), a.clone()), (spec.gamma * spec.n_bath, ad.clone())];
        let pulse_gen = Lindbladian::from_sparse(&h0, vec![field], &jumps)?;
        let rwa_gen = Lindbladian::from_sparse(&h0, vec![ad.clone(), a.clone()], &jumps)?;

        let sx = re(1.0 / libm::sqrt(2.0 * w));
        let sp = Complex64::new(0.0, libm::sqrt(0.5 * w));
        let quadratures = [
            sparse_add(dim, &[(sx, &a), (sx, &ad)]),
            sparse_add(dim, &[(sx, &b), (sx, &bd)]),
            sparse_add(dim, &[(sp, &ad), (-sp, &a)]),
            sparse_add(dim, &[(sp, &bd), (-sp, &b)]),
        ];
        let mut products = Vec::with_capacity(10);
        for i in 0..4 {
            for j in i..4 {
                let ij = quadratures[i].matmul(&quadratures[j])?;
                let ji = quadratures[j].matmul(&quadratures[i])?;
                products.push(sparse_add(dim, &[(re(0.5), &ij), (re(0.5), &ji)]));
            }
        }
        Ok(Self {
            spec,
            n_trunc,
            pulse_gen,
            rwa_gen,
            quadratures,
            products,
            a,
        })
    }

    pub fn dim(&self) -> usize {
        self.n_trunc * self.n_trunc
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// Truncated coherent ket `|α₁⟩ ⊗ |α₂⟩`.
    pub fn coherent_ket(&self, alpha: [Complex64; 2]) -> Vec<Complex64> {
        let n = self.n_trunc;
        let single = |al: Complex64| {
            let mut v = Vec::with_capacity(n);
            let mut amp = re(libm::exp(-0.5 * al.norm_sqr()));
            for k in 0..n {
                v.push(amp);
                amp = amp * al / libm::sqrt((k + 1) as f64);
            }
            v
        };
        let (u, w) = (single(alpha[0]), single(alpha[1]));
        let mut ket = Vec::with_capacity(n * n);
        for x in &u {
            ket.extend(w.iter().map(|y| x * y));
        }
        ket
    }

    pub fn coherent_state(&self, alpha: [Complex64; 2]) -> DensityMatrix {
        Operator::projector(&self.coherent_ket(alpha))
    }

    pub fn vacuum(&self) -> DensityMatrix {
        Operator::basis_projector(self.dim(), 0)
    }

    /// Weight on the top two levels of either mode.
    pub fn top_population(&self, rho: &Operator) -> f64 {
        let n = self.n_trunc;
        let mut p = 0.0;
        for n1 in 0..n {
            for n2 in 0..n {
                if n1 + 2 >= n || n2 + 2 >= n {
                    let k = n1 * n + n2;
                    p += rho.get(k, k).re.abs();
                }
            }
        }
        p / rho.trace().re.abs().max(f64::MIN_POSITIVE)
    }

    fn check_leakage(&self, rho: &Operator) -> Result<()> {
        let population = self.top_population(rho);
        if population > 1e-8 {
            return Err(Error::TruncationTooSmall {
                n_trunc: self.n_trunc,
                population,
            });
        }
        Ok(())
    }

    /// Raw moments `Tr(O ρ)` of any (possibly unnormalized) operator.
    pub fn moments(&self, rho: &Operator) -> MomentVector {
        let x = rho.as_slice();
        let mut v = [0.0; MOMENT_LEN];
        v[C] = rho.trace().re;
        for (k, q) in self.quadratures.iter().enumerate() {
            v[X1 + k] = q.trace_with(x).re;
        }
        for (k, p) in self.products.iter().enumerate() {
            v[V11 + k] = p.trace_with(x).re;
        }
        MomentVector(v)
    }

    /// `Im Tr(σ [μ(a + a†), ρ])` by direct matrix algebra.
    pub fn field_trace(&self, sigma: &Operator, rho: &Operator) -> f64 {
        // the pulse generator's control is −μ(a + a†)
        -self.pulse_gen.control_gradient(0, sigma.as_slice(), rho.as_slice())
    }

    /// Forward trajectory; fails as soon as the top levels become populated.
    ///
    /// Stores every density matrix, so memory grows as `n_trunc⁴ · grid.len()`;
    /// prefer [`FockOracle::propagate_moments`] at large truncations.
    pub fn propagate_forward(&self, drive: OscillatorDrive<'_>, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<StateTrajectory> {
        let mut states = Vec::with_capacity(grid.len());
        self.visit_forward(drive, rho0, grid, |rho| states.push(rho.clone()))?;
        Ok(StateTrajectory { states })
    }

    /// Raw moments along the forward trajectory, one state in memory at a time.
    pub fn propagate_moments(&self, drive: OscillatorDrive<'_>, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Vec<MomentVector>> {
        let mut out = Vec::with_capacity(grid.len());
        self.visit_forward(drive, rho0, grid, |rho| out.push(self.moments(rho)))?;
        Ok(out)
    }

    fn visit_forward(&self, drive: OscillatorDrive<'_>, rho0: &DensityMatrix, grid: &TimeGrid, mut visit: impl FnMut(&Operator)) -> Result<()> {
        drive.check(grid)?;
        self.check_dim(rho0)?;
        self.check_leakage(rho0)?;
        visit(rho0);
        let dt = grid.dt();
        let mut y = rho0.as_slice().to_vec();
        let mut emit = |y: &[Complex64]| -> Result<()> {
            let rho = Operator::from_vec(self.dim(), y.to_vec())?;
            self.check_leakage(&rho)?;
            visit(&rho);
            Ok(())
        };
        match drive {
            OscillatorDrive::Pulse(p) => {
                let mut st = Stepper::new(&self.pulse_gen);
                for k in 0..grid.n_steps() {
                    st.step_constant(Direction::Forward, &mut y, dt, p.half_values[k]);
                    emit(&y)?;
                }
            }
            OscillatorDrive::Oscillatory { amplitude } => {
                let w = self.spec.omega;
                let mut st = Stepper::new(&self.rwa_gen);
                for k in 0..grid.n_steps() {
                    st.step(Direction::Forward, &mut y, grid.time(k), dt, |t, c| {
                        let phase = Complex64::new(libm::cos(w * t), -libm::sin(w * t)) * amplitude;
                        c[0] = phase;
                        c[1] = phase.conj();
                    });
                    emit(&y)?;
                }
            }
        }
        Ok(())
    }

    /// Co-state trajectory under the pulse drive, seeded at `τ`.
    pub fn propagate_backward(&self, pulse: &PulseProfile, sigma_tau: &Operator, grid: &TimeGrid) -> Result<StateTrajectory> {
        pulse.check_grid(grid)?;
        self.check_dim(sigma_tau)?;
        let dt = grid.dt();
        let mut st = Stepper::new(&self.pulse_gen);
        let mut y = sigma_tau.as_slice().to_vec();
        let mut states = vec![sigma_tau.clone(); grid.len()];
        for k in (0..grid.n_steps()).rev() {
            st.step_constant(Direction::Backward, &mut y, dt, pulse.half_values[k]);
            states[k] = Operator::from_vec(self.dim(), y.clone())?;
        }
        Ok(StateTrajectory { states })
    }

    fn check_dim(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(())
    }

    /// Mixed Gaussian state `U (ρ_th,1 ⊗ ρ_th,2) U†` as a weighted ket ensemble,
    /// with `U = exp(−iK)` for the quadratic-plus-linear generator in `prep`.
    pub fn prepare_gaussian(&self, prep: &GaussianPrep) -> Result<KetEnsemble> {
        let n = self.n_trunc;
        let dim = self.dim();
        let a = &self.a;
        let b = mode_annihilator(n, 1);
        let (ad, bd) = (a.dagger(), b.dagger());
        let sq = |op: &SparseOp| op.matmul(op);
        let (a2, b2, ad2, bd2) = (sq(a)?, sq(&b)?, sq(&ad)?, sq(&bd)?);
        let ab = a.matmul(&b)?;
        let adbd = ad.matmul(&bd)?;
        let adb = ad.matmul(&b)?;
        let abd = a.matmul(&bd)?;
        let [s1, s2] = prep.squeeze;
        let [d1, d2] = prep.displacement;
        let (tm, bs) = (prep.two_mode, prep.beam_splitter);
        let k = sparse_add(
            dim,
            &[
                (s1, &ad2),
                (s1.conj(), &a2),
                (s2, &bd2),
                (s2.conj(), &b2),
                (tm, &adbd),
                (tm.conj(), &ab),
                (bs, &adb),
                (bs.conj(), &abd),
                (d1, &ad),
                (d1.conj(), a),
                (d2, &bd),
                (d2.conj(), &b),
            ],
        );

        let thermal = |nbar: f64| -> Vec<f64> {
            if nbar == 0.0 {
                return vec![1.0];
            }
            let q = nbar / (1.0 + nbar);
            let mut w = Vec::new();
            let mut p = 1.0 / (1.0 + nbar);
            while p > 1e-13 && w.len() < n {
                w.push(p);
                p *= q;
            }
            w
        };
        let (w1, w2) = (thermal(prep.occupation[0]), thermal(prep.occupation[1]));
        let steps = prep.steps.max(1);
        let dt = 1.0 / steps as f64;
        let mut rk = Rk4::<Complex64>::new(dim);
        let mut weights = Vec::new();
        let mut kets = Vec::new();
        for (n1, &p1) in w1.iter().enumerate() {
            for (n2, &p2) in w2.iter().enumerate() {
                let p = p1 * p2;
                if p < 1e-13 {
                    continue;
                }
                let mut ket = vec![ZERO; dim];
                ket[n1 * n + n2] = ONE;
                for _ in 0..steps {
                    rk.step(&mut ket, 0.0, dt, |_, y, out| {
                        out.fill(ZERO);
                        k.apply_acc(y, -I, out);
                    });
                }
                weights.push(p);
                kets.push(ket);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let ens = KetEnsemble { weights, kets };
        let population = ens.top_population(n);
        if population > 1e-8 {
            return Err(Error::TruncationTooSmall { n_trunc: n, population });
        }
        Ok(ens)
    }

    /// Raw moments of a ket ensemble.
    pub fn ensemble_moments(&self, ens: &KetEnsemble) -> MomentVector {
        let dim = self.dim();
        let mut v = [0.0; MOMENT_LEN];
        let mut buf = vec![ZERO; dim];
        for (w, ket) in ens.weights.iter().zip(&ens.kets) {
            v[C] += w * ket.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let ops = self.quadratures.iter().chain(&self.products);
            for (slot, op) in (X1..MOMENT_LEN).zip(ops) {
                buf.fill(ZERO);
                op.apply_acc(ket, ONE, &mut buf);
                v[slot] += w * inner(ket, &buf).re;
            }
        }
        MomentVector(v)
    }

    /// `Im Tr(σ [μ(a + a†), ρ])` for two ket ensembles.
    pub fn ensemble_field_trace(&self, sigma: &KetEnsemble, rho: &KetEnsemble) -> f64 {
        // Tr(σ[X,ρ]) = Σ q_m p_n (⟨u|X|v⟩⟨v|u⟩ − ⟨u|v⟩⟨v|X|u⟩) = Σ q p · 2i Im(⟨u|X|v⟩⟨v|u⟩)
        let dim = self.dim();
        let field = sparse_add(dim, &[(re(self.spec.mu), &self.a), (re(self.spec.mu), &self.a.dagger())]);
        let xv: Vec<Vec<Complex64>> = rho
            .kets
            .iter()
            .map(|v| {
                let mut out = vec![ZERO; dim];
                field.apply_acc(v, ONE, &mut out);
                out
            })
            .collect();
        let mut acc = 0.0;
        for (q, u) in sigma.weights.iter().zip(&sigma.kets) {
            for ((p, v), xv) in rho.weights.iter().zip(&rho.kets).zip(&xv) {
                acc += q * p * 2.0 * (inner(u, xv) * inner(v, u)).im;
            }
        }
        acc
    }
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Parameters of a random Gaussian preparation for the Fock oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrep {
    /// Coefficients of `a†²`, `b†²` (plus Hermitian conjugates) in `K`.
    pub squeeze: [Complex64; 2],
    /// Coefficient of `a†b†`.
    pub two_mode: Complex64,
    /// Coefficient of `a†b`.
    pub beam_splitter: Complex64,
    /// Coefficients of `a†`, `b†`.
    pub displacement: [Complex64; 2],
    /// Thermal occupations before the unitary.
    pub occupation: [f64; 2],
    /// RK4 steps used for `exp(−iK)`.
    pub steps: usize,
}

/// `Σ_k w_k |ψ_k⟩⟨ψ_k|`.
#[derive(Debug, Clone)]
pub struct KetEnsemble {
    pub weights: Vec<f64>,
    pub kets: Vec<Vec<Complex64>>,
}

impl KetEnsemble {
    fn top_population(&self, n: usize) -> f64 {
        let mut p = 0.0;
        for (w, ket) in self.weights.iter().zip(&self.kets) {
            for (k, z) in ket.iter().enumerate() {
                let (n1, n2) = (k / n, k % n);
                if n1 + 2 >= n || n2 + 2 >= n {
                    p += w * z.norm_sqr();
                }
            }
        }
        p
    }
}
