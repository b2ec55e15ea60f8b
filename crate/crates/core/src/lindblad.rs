// Copyright 2026 The chargeopt Authors
// SPDX-License-Identifier: Apache-2.0

//! GKSL propagation for a driven qubit charger coupled to qubit battery cells.
//!
//! The generator is `L ρ = −i[H, ρ] + Σ_k r_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`
//! with `H = H₀ + Σ_c u_c(t) V_c`. Forward states solve `dρ/dt = Lρ`; co-states
//! solve `dσ/dt = −L†σ` from the final time back to zero. Both are integrated
//! with RK4, holding a pulse at its midpoint value over each step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::ode::Rk4;
use crate::operators::{
    dagger_into, embed, pauli, DensityMatrix, Operator, PauliKind, SparseOp, I, ONE, ZERO,
};
use crate::pulse::{PulseProfile, TimeGrid};

/// Physical parameters of the qubit charger/battery model (units of ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitSystemSpec {
    pub omega: f64,
    pub g: f64,
    pub gamma: f64,
    pub mu: f64,
    /// Mean bath occupation `N_b(T)`.
    pub n_bath: f64,
    /// Number of battery cells, each coupled only to the charger.
    pub cells: usize,
}

impl QubitSystemSpec {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("omega", self.omega),
            ("g", self.g),
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("n_bath", self.n_bath),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative and finite, got {v}")));
            }
        }
        if self.cells == 0 {
            return Err(invalid("at least one battery cell is required"));
        }
        if self.cells > 8 {
            return Err(invalid("more than 8 battery cells is beyond dense scale"));
        }
        Ok(())
    }

    /// Factor dimensions, charger first.
    pub fn dims(&self) -> Vec<usize> {
        vec![2; self.cells + 1]
    }

    pub fn dim(&self) -> usize {
        1 << (self.cells + 1)
    }

    pub fn battery_dim(&self) -> usize {
        1 << self.cells
    }
}

/// One dissipation channel `r·D_L`.
#[derive(Debug, Clone)]
struct Jump {
    rate: f64,
    op: SparseOp,
    op_dag: SparseOp,
}

/// Sparse-kernel GKSL generator with linearly entering control terms.
#[derive(Debug, Clone)]
pub struct Lindbladian {
    dim: usize,
    controls: Vec<SparseOp>,
    jumps: Vec<Jump>,
    /// `−iH₀ − ½Σ r L†L`
    k_fwd: SparseOp,
    /// `+iH₀ − ½Σ r L†L`
    k_adj: SparseOp,
}

/// Scratch space for [`Lindbladian::apply`].
#[derive(Debug, Clone)]
pub struct Workspace {
    a: Vec<Complex64>,
    b: Vec<Complex64>,
}

impl Workspace {
    pub fn new(dim: usize) -> Self {
        Self {
            a: vec![ZERO; dim * dim],
            b: vec![ZERO; dim * dim],
        }
    }
}

impl Lindbladian {
    /// `h0` and the total Hamiltonian must be Hermitian; control operators may
    /// come in conjugate pairs with conjugate coefficients.
    pub fn new(h0: &Operator, controls: &[Operator], jumps: &[(f64, Operator)]) -> Result<Self> {
        let controls: Vec<SparseOp> = controls.iter().map(SparseOp::from_dense).collect();
        let jumps: Vec<(f64, SparseOp)> = jumps.iter().map(|(r, l)| (*r, SparseOp::from_dense(l))).collect();
        Self::from_sparse(&SparseOp::from_dense(h0), controls, &jumps)
    }

    /// Same as [`Lindbladian::new`] without ever forming dense operators.
    pub fn from_sparse(h0: &SparseOp, controls: Vec<SparseOp>, jumps: &[(f64, SparseOp)]) -> Result<Self> {
        let dim = h0.dim();
        for op in controls.iter().chain(jumps.iter().map(|(_, l)| l)) {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                });
            }
        }
        let mut damping = Vec::new();
        let mut js = Vec::new();
        for (rate, op) in jumps {
            if *rate == 0.0 {
                continue;
            }
            let op_dag = op.dagger();
            damping.push(op_dag.matmul(op)?.scaled(Complex64::new(-0.5 * rate, 0.0)));
            js.push(Jump {
                rate: *rate,
                op: op.clone(),
                op_dag,
            });
        }
        let mut fwd = vec![h0.scaled(-I)];
        fwd.extend(damping.iter().cloned());
        let mut adj = vec![h0.scaled(I)];
        adj.extend(damping);
        Ok(Self {
            dim,
            controls,
            jumps: js,
            k_fwd: SparseOp::sum(dim, &fwd),
            k_adj: SparseOp::sum(dim, &adj),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    /// `out = L(ρ)` for Hermitian `ρ`, with control coefficients `coeffs`.
    pub fn apply(&self, coeffs: &[Complex64], rho: &[Complex64], out: &mut [Complex64], ws: &mut Workspace) {
        let n = self.dim;
        let x = &mut ws.a;
        x.fill(ZERO);
        self.k_fwd.left_mul_acc(rho, ONE, x);
        for (v, &u) in self.controls.iter().zip(coeffs) {
            if u != ZERO {
                v.left_mul_acc(rho, -I * u, x);
            }
        }
        // −i[H,ρ] − ½{L†L,ρ} = X + X†
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = x[i * n + j] + x[j * n + i].conj();
            }
        }
        for jump in &self.jumps {
            ws.a.fill(ZERO);
            jump.op.left_mul_acc(rho, ONE, &mut ws.a);
            dagger_into(&ws.a, n, &mut ws.b);
            jump.op.left_mul_acc(&ws.b, Complex64::new(jump.rate, 0.0), out);
        }
    }

    /// `out = L†(X)` for Hermitian `X` (Heisenberg-picture generator).
    pub fn apply_adjoint(&self, coeffs: &[Complex64], x_in: &[Complex64], out: &mut [Complex64], ws: &mut Workspace) {
        let n = self.dim;
        let y = &mut ws.a;
        y.fill(ZERO);
        self.k_adj.left_mul_acc(x_in, ONE, y);
        for (v, &u) in self.controls.iter().zip(coeffs) {
            if u != ZERO {
                v.left_mul_acc(x_in, I * u, y);
            }
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = y[i * n + j] + y[j * n + i].conj();
            }
        }
        for jump in &self.jumps {
            ws.a.fill(ZERO);
            jump.op_dag.left_mul_acc(x_in, ONE, &mut ws.a);
            dagger_into(&ws.a, n, &mut ws.b);
            jump.op_dag.left_mul_acc(&ws.b, Complex64::new(jump.rate, 0.0), out);
        }
    }

    /// `Im Tr(σ [V_c, ρ])`, the field-gradient density of control `c`.
    pub fn control_gradient(&self, control: usize, sigma: &[Complex64], rho: &[Complex64]) -> f64 {
        let v = &self.controls[control];
        // Tr(σVρ) − Tr(σρV) = Tr(σVρ) − Tr(ρVσ)
        let a = v.sandwich_trace(sigma, rho);
        let b = v.sandwich_trace(rho, sigma);
        (a - b).im
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// RK4 stepper bound to one generator.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    generator: &'a Lindbladian,
    rk: Rk4<Complex64>,
    ws: Workspace,
    coeffs: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    pub fn new(generator: &'a Lindbladian) -> Self {
        let n = generator.dim();
        Self {
            generator,
            rk: Rk4::new(n * n),
            ws: Workspace::new(n),
            coeffs: vec![ZERO; generator.n_controls()],
        }
    }

    /// Forward step `t → t + dt` or backward step `t + dt → t` of `dσ/dt = −L†σ`.
    ///
    /// `coeffs(t, out)` fills the control coefficients at physical time `t`.
    pub fn step<F>(&mut self, dir: Direction, y: &mut [Complex64], t: f64, dt: f64, coeffs: F)
    where
        F: Fn(f64, &mut [Complex64]),
    {
        let Self {
            generator,
            rk,
            ws,
            coeffs: buf,
        } = self;
        match dir {
            Direction::Forward => rk.step(y, t, dt, |s, state, out| {
                coeffs(s, buf);
                generator.apply(buf, state, out, ws);
            }),
            Direction::Backward => {
                let t_end = t + dt;
                rk.step(y, 0.0, dt, |s, state, out| {
                    coeffs(t_end - s, buf);
                    generator.apply_adjoint(buf, state, out, ws);
                })
            }
        }
    }

    /// Step with a single real control held at `eps`.
    pub fn step_constant(&mut self, dir: Direction, y: &mut [Complex64], dt: f64, eps: f64) {
        self.step(dir, y, 0.0, dt, |_, c| c[0] = Complex64::new(eps, 0.0));
    }
}

/// Ordered states on the grid points, `states[k]` at `t_k`.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    pub states: Vec<DensityMatrix>,
}

/// Prebuilt operators and generators of the qubit model.
#[derive(Debug, Clone)]
pub struct QubitModel {
    spec: QubitSystemSpec,
    h_static: Operator,
    /// `∂H/∂ε = −μ σ_A^x ⊗ I`.
    drive: Operator,
    sigma_plus_a: Operator,
    sigma_minus_a: Operator,
    pulse_generator: Lindbladian,
    rwa_generator: Lindbladian,
}

impl QubitModel {
    pub fn new(spec: QubitSystemSpec) -> Result<Self> {
        spec.validate()?;
        let dims = spec.dims();
        let n = spec.dim();
        let sz_term = |site| -> Result<Operator> {
            let local = &(&Operator::identity(2) - &pauli(PauliKind::Z)) * (0.5 * spec.omega);
            embed(&local, site, &dims)
        };
        let sp_a = embed(&pauli(PauliKind::Plus), 0, &dims)?;
        let sm_a = embed(&pauli(PauliKind::Minus), 0, &dims)?;
        let mut h = sz_term(0)?;
        for cell in 1..=spec.cells {
            h = &h + &sz_term(cell)?;
            let sp_k = embed(&pauli(PauliKind::Plus), cell, &dims)?;
            let sm_k = embed(&pauli(PauliKind::Minus), cell, &dims)?;
            let exchange = &sp_a.matmul(&sm_k)? + &sm_a.matmul(&sp_k)?;
            h = &h + &(&exchange * spec.g);
        }
        debug_assert_eq!(h.dim(), n);
        let drive = &embed(&pauli(PauliKind::X), 0, &dims)? * (-spec.mu);
        let jumps = [
            (spec.gamma * (spec.n_bath + 1.0), sm_a.clone()),
            (spec.gamma * spec.n_bath, sp_a.clone()),
        ];
        let pulse_generator = Lindbladian::new(&h, core::slice::from_ref(&drive), &jumps)?;
        let rwa_generator = Lindbladian::new(&h, &[sp_a.clone(), sm_a.clone()], &jumps)?;
        Ok(Self {
            spec,
            h_static: h,
            drive,
            sigma_plus_a: sp_a,
            sigma_minus_a: sm_a,
            pulse_generator,
            rwa_generator,
        })
    }

    pub fn spec(&self) -> &QubitSystemSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn static_hamiltonian(&self) -> &Operator {
        &self.h_static
    }

    pub fn drive_operator(&self) -> &Operator {
        &self.drive
    }

    pub fn pulse_generator(&self) -> &Lindbladian {
        &self.pulse_generator
    }

    pub fn hamiltonian(&self, eps: f64) -> Operator {
        &self.h_static + &(&self.drive * eps)
    }

    pub fn oscillatory_hamiltonian(&self, t: f64, amplitude: f64) -> Operator {
        let w = self.spec.omega * t;
        let phase = Complex64::new(libm::cos(w), -libm::sin(w));
        let drive = &self.sigma_plus_a.scale(phase * amplitude) + &self.sigma_minus_a.scale(phase.conj() * amplitude);
        &self.h_static + &drive
    }

    /// `|0…0⟩⟨0…0|`, ground state of the free Hamiltonians.
    pub fn ground_state(&self) -> DensityMatrix {
        Operator::basis_projector(self.dim(), 0)
    }

    /// `I_A ⊗ |1…1⟩⟨1…1|_B`: every battery cell excited, charger arbitrary.
    pub fn excited_battery_target(&self) -> Operator {
        let nb = self.spec.battery_dim();
        let mut op = Operator::zeros(self.dim());
        for a in 0..2 {
            let idx = a * nb + (nb - 1);
            op.set(idx, idx, ONE);
        }
        op
    }

    /// Battery Hamiltonian `Σ_k ω(I − σ_k^z)/2` on the battery factor alone.
    pub fn battery_hamiltonian(&self) -> Operator {
        let diag: Vec<f64> = (0..self.spec.battery_dim())
            .map(|b| self.spec.omega * (b as u32).count_ones() as f64)
            .collect();
        Operator::from_real_diagonal(&diag)
    }

    pub fn propagate_forward(&self, pulse: &PulseProfile, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<StateTrajectory> {
        pulse.check_grid(grid)?;
        self.check_state(rho0)?;
        let mut stepper = Stepper::new(&self.pulse_generator);
        let dt = grid.dt();
        let mut y = rho0.as_slice().to_vec();
        let mut states = Vec::with_capacity(grid.len());
        states.push(rho0.clone());
        for k in 0..grid.n_steps() {
            stepper.step_constant(Direction::Forward, &mut y, dt, pulse.half_values[k]);
            states.push(Operator::from_vec(self.dim(), y.clone())?);
        }
        Ok(StateTrajectory { states })
    }

    /// Co-state trajectory seeded with `sigma_tau` at the final time.
    pub fn propagate_backward(&self, pulse: &PulseProfile, sigma_tau: &Operator, grid: &TimeGrid) -> Result<StateTrajectory> {
        pulse.check_grid(grid)?;
        self.check_state(sigma_tau)?;
        let mut stepper = Stepper::new(&self.pulse_generator);
        let dt = grid.dt();
        let mut y = sigma_tau.as_slice().to_vec();
        let mut states = vec![Operator::zeros(0); grid.len()];
        states[grid.n_steps()] = sigma_tau.clone();
        for k in (0..grid.n_steps()).rev() {
            stepper.step_constant(Direction::Backward, &mut y, dt, pulse.half_values[k]);
            states[k] = Operator::from_vec(self.dim(), y.clone())?;
        }
        Ok(StateTrajectory { states })
    }

    /// Resonant RWA drive `F(e^{−iωt}σ_A⁺ + e^{iωt}σ_A⁻)`.
    pub fn propagate_oscillatory(&self, amplitude: f64, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<StateTrajectory> {
        if !(amplitude >= 0.0) {
            return Err(invalid("drive amplitude must be non-negative"));
        }
        self.check_state(rho0)?;
        let omega = self.spec.omega;
        let mut stepper = Stepper::new(&self.rwa_generator);
        let dt = grid.dt();
        let mut y = rho0.as_slice().to_vec();
        let mut states = Vec::with_capacity(grid.len());
        states.push(rho0.clone());
        for k in 0..grid.n_steps() {
            stepper.step(Direction::Forward, &mut y, grid.time(k), dt, |t, c| {
                let w = omega * t;
                let phase = Complex64::new(libm::cos(w), -libm::sin(w)) * amplitude;
                c[0] = phase;
                c[1] = phase.conj();
            });
            states.push(Operator::from_vec(self.dim(), y.clone())?);
        }
        Ok(StateTrajectory { states })
    }

    fn check_state(&self, op: &Operator) -> Result<()> {
        if op.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: op.dim(),
            });
        }
        Ok(())
    }
}

/// `H₀ − μ·eps·σ_A^x ⊗ I`.
pub fn build_drive_hamiltonian(spec: &QubitSystemSpec, eps: f64) -> Result<Operator> {
    Ok(QubitModel::new(*spec)?.hamiltonian(eps))
}

/// `H₀ + F(e^{−iωt}σ_A⁺ + e^{iωt}σ_A⁻)`.
pub fn build_oscillatory_hamiltonian(spec: &QubitSystemSpec, t: f64, amplitude: f64) -> Result<Operator> {
    if !(amplitude >= 0.0) {
        return Err(invalid("drive amplitude must be non-negative"));
    }
    Ok(QubitModel::new(*spec)?.oscillatory_hamiltonian(t, amplitude))
}

fn charger_channels(spec: &QubitSystemSpec) -> Result<[(f64, Operator); 2]> {
    let dims = spec.dims();
    Ok([
        (spec.gamma * (spec.n_bath + 1.0), embed(&pauli(PauliKind::Minus), 0, &dims)?),
        (spec.gamma * spec.n_bath, embed(&pauli(PauliKind::Plus), 0, &dims)?),
    ])
}

/// Thermal charger dissipator `γ(N_b+1)D[σ_A⁻] + γN_b D[σ_A⁺]`.
pub fn dissipator(spec: &QubitSystemSpec, rho: &DensityMatrix) -> Result<DensityMatrix> {
    spec.validate()?;
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: rho.dim(),
        });
    }
    let mut out = Operator::zeros(rho.dim());
    for (rate, l) in charger_channels(spec)? {
        let ld = l.dagger();
        let ldl = ld.matmul(&l)?;
        let jump = l.matmul(rho)?.matmul(&ld)?;
        let anti = &ldl.matmul(rho)? + &rho.matmul(&ldl)?;
        out = &out + &(&(&jump - &(&anti * 0.5)) * rate);
    }
    Ok(out)
}

/// Heisenberg-picture dissipator `Σ r (L†XL − ½{L†L, X})`.
pub fn adjoint_dissipator(spec: &QubitSystemSpec, x: &Operator) -> Result<Operator> {
    spec.validate()?;
    if x.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: x.dim(),
        });
    }
    let mut out = Operator::zeros(x.dim());
    for (rate, l) in charger_channels(spec)? {
        let ld = l.dagger();
        let ldl = ld.matmul(&l)?;
        let jump = ld.matmul(x)?.matmul(&l)?;
        let anti = &ldl.matmul(x)? + &x.matmul(&ldl)?;
        out = &out + &(&(&jump - &(&anti * 0.5)) * rate);
    }
    Ok(out)
}

pub fn propagate_forward(spec: &QubitSystemSpec, pulse: &PulseProfile, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<StateTrajectory> {
    QubitModel::new(*spec)?.propagate_forward(pulse, rho0, grid)
}

pub fn propagate_backward(spec: &QubitSystemSpec, pulse: &PulseProfile, sigma_tau: &Operator, grid: &TimeGrid) -> Result<StateTrajectory> {
    QubitModel::new(*spec)?.propagate_backward(pulse, sigma_tau, grid)
}
